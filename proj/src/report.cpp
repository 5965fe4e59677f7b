#include "ips/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ips/trace_io.hpp"

namespace ips::report {

namespace {

struct Series {
  std::vector<double> t_s;  // seconds from trace start
  std::vector<double> y;
};

// One plot panel mapped into SVG user units.
class Panel {
 public:
  Panel(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {}

  void fit(const Series& s, bool log_y) {
    log_ = log_y;
    if (s.y.empty()) {
      t_min_ = y_min_ = 0.0;
      t_max_ = y_max_ = 1.0;
      return;
    }
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double yv = value(s.y[i]);
      t_min_ = std::min(t_min_, s.t_s[i]);
      t_max_ = std::max(t_max_, s.t_s[i]);
      y_min_ = std::min(y_min_, yv);
      y_max_ = std::max(y_max_, yv);
    }
    if (t_max_ <= t_min_) t_max_ = t_min_ + 1;
    if (y_max_ <= y_min_) {
      y_min_ -= 0.5;
      y_max_ += 0.5;
    }
    const double pad = 0.05 * (y_max_ - y_min_);
    y_min_ -= pad;
    y_max_ += pad;
  }

  double px(double t) const { return x_ + (t - t_min_) / (t_max_ - t_min_) * w_; }
  double py(double yv) const { return y_ + h_ - (value(yv) - y_min_) / (y_max_ - y_min_) * h_; }

  void polyline(std::ostream& os, const Series& s, const char* color) const {
    // Split at gaps > 5x the median step so loss intervals show as breaks.
    if (s.t_s.empty()) return;
    std::vector<double> steps;
    for (std::size_t i = 1; i < s.t_s.size(); ++i) steps.push_back(s.t_s[i] - s.t_s[i - 1]);
    double gap_limit = 1e18;
    if (!steps.empty()) {
      std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
      gap_limit = 5.0 * std::max(steps[steps.size() / 2], 1e-9);
    }
    std::ostringstream points;
    auto flush = [&] {
      const std::string p = points.str();
      if (!p.empty()) {
        os << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"" << p
           << "\"/>\n";
      }
      points.str("");
    };
    for (std::size_t i = 0; i < s.t_s.size(); ++i) {
      if (i > 0 && s.t_s[i] - s.t_s[i - 1] > gap_limit) flush();
      points << px(s.t_s[i]) << ',' << py(s.y[i]) << ' ';
    }
    flush();
  }

  void frame(std::ostream& os, const std::string& label) const {
    os << "  <rect x=\"" << x_ << "\" y=\"" << y_ << "\" width=\"" << w_ << "\" height=\"" << h_
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    os << "  <text x=\"" << x_ + 4 << "\" y=\"" << y_ + 14 << "\" font-size=\"11\" fill=\"#222\">"
       << label << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double yv = y_min_ + (y_max_ - y_min_) * k / 4.0;
      const double ypix = y_ + h_ - h_ * k / 4.0;
      os << "  <text x=\"" << x_ - 6 << "\" y=\"" << ypix + 3
         << "\" font-size=\"8\" text-anchor=\"end\" fill=\"#555\">" << tick_label(yv) << "</text>\n";
      const double tv = t_min_ + (t_max_ - t_min_) * k / 4.0;
      os << "  <text x=\"" << px(tv) << "\" y=\"" << y_ + h_ + 12
         << "\" font-size=\"8\" text-anchor=\"middle\" fill=\"#555\">" << std::lround(tv) << "s</text>\n";
    }
  }

  void marker(std::ostream& os, double t0, double t1, const char* color) const {
    const double a = std::clamp(px(t0), x_, x_ + w_);
    const double b = std::clamp(px(t1), x_, x_ + w_);
    os << "  <rect x=\"" << a << "\" y=\"" << y_ << "\" width=\"" << std::max(1.0, b - a)
       << "\" height=\"" << h_ << "\" fill=\"" << color << "\" fill-opacity=\"0.25\"/>\n";
  }

 private:
  double value(double y) const { return log_ ? std::log10(std::max(y, 1e-300)) : y; }
  std::string tick_label(double v) const {
    std::ostringstream s;
    if (log_) {
      s << "1e" << std::lround(v);
    } else {
      s.precision(3);
      s << v;
    }
    return s.str();
  }

  double x_, y_, w_, h_;
  bool log_ = false;
  double t_min_ = 1e300, t_max_ = -1e300, y_min_ = 1e300, y_max_ = -1e300;
};

}  // namespace

ReportFiles write_report(const std::vector<SignalSample>& trace,
                         const std::vector<detect::DetectionEvent>& events,
                         const detect::DetectorConfig& ber_config,
                         const detect::DetectorConfig& oss_config,
                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::set<std::string> trace_links;
  for (const auto& s : trace) trace_links.insert(s.link_id);
  for (const auto& ev : events) {
    if (!trace_links.count(ev.signal_id)) {
      throw std::invalid_argument("events reference link '" + ev.signal_id +
                                  "' that is not in the trace");
    }
  }
  if (trace.empty()) throw std::invalid_argument("cannot report on an empty trace");
  const std::int64_t t0_ms = trace.front().timestamp_ms;

  ReportFiles files;
  files.summary = out_dir / "summary.csv";
  std::ofstream summary(files.summary);
  summary << "link_id,samples,loss_samples,mean_oss_dbm,min_oss_dbm,max_oss_dbm,mean_ber,"
             "kl_change_events,signal_lost_events\n";

  for (const std::string& link : trace_links) {
    Series ber, oss;
    std::size_t n = 0, loss = 0;
    double oss_sum = 0, oss_min = 1e300, oss_max = -1e300, ber_sum = 0;
    std::size_t oss_n = 0, ber_n = 0;
    std::vector<double> ber_values, oss_values;
    for (const auto& s : trace) {
      if (s.link_id != link) continue;
      ++n;
      const double t = static_cast<double>(s.timestamp_ms - t0_ms) / 1000.0;
      if (s.loss_of_signal) ++loss;
      if (s.oss_dbm) {
        oss.t_s.push_back(t);
        oss.y.push_back(*s.oss_dbm);
        oss_values.push_back(*s.oss_dbm);
        oss_sum += *s.oss_dbm;
        oss_min = std::min(oss_min, *s.oss_dbm);
        oss_max = std::max(oss_max, *s.oss_dbm);
        ++oss_n;
      }
      if (s.ber) {
        ber.t_s.push_back(t);
        ber.y.push_back(*s.ber);
        ber_values.push_back(*s.ber * ber_config.ber_scale);
        ber_sum += *s.ber;
        ++ber_n;
      }
    }

    // Two stacked panels, error rate above and OSS below.
    const std::filesystem::path plot_path = out_dir / (link + ".svg");
    std::ofstream svg(plot_path);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"480\" "
           "viewBox=\"0 0 900 480\">\n"
        << "  <rect width=\"900\" height=\"480\" fill=\"white\"/>\n"
        << "  <text x=\"450\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">link " << link
        << "</text>\n";
    Panel top(60, 30, 810, 190);
    Panel bottom(60, 255, 810, 190);
    top.fit(ber, true);
    bottom.fit(oss, false);
    for (const auto& ev : events) {
      if (ev.signal_id != link) continue;
      const double a = static_cast<double>(ev.t_start_ms - t0_ms) / 1000.0;
      const double b = static_cast<double>(ev.t_end_ms - t0_ms) / 1000.0;
      const char* color = ev.kind == detect::EventKind::signal_lost ? "#d62728" : "#ff7f0e";
      top.marker(svg, a, b, color);
      bottom.marker(svg, a, b, color);
    }
    top.polyline(svg, ber, "#1f77b4");
    bottom.polyline(svg, oss, "#2ca02c");
    top.frame(svg, "BER (errors/bit, log)");
    bottom.frame(svg, "OSS (dBm)");
    svg << "</svg>\n";
    if (svg.fail()) throw std::runtime_error("write failure on " + plot_path.string());
    files.plots.push_back(plot_path);

    // Per-window KL divergence series for both fields.
    const std::filesystem::path kld_path = out_dir / (link + "_kld.csv");
    std::ofstream kld(kld_path);
    kld << "field,pair_index,kld\n";
    for (auto [field, values] : {std::pair{std::string("ber"), &ber_values},
                                 std::pair{std::string("oss"), &oss_values}}) {
      const detect::DetectorConfig& cfg = field == "ber" ? ber_config : oss_config;
      if (values->size() >= 2 * static_cast<std::size_t>(cfg.window_size)) {
        const std::vector<double> kls = detect::adjacent_window_kls(*values, cfg);
        for (std::size_t i = 0; i < kls.size(); ++i) {
          kld << field << ',' << i << ',' << io::format_double(kls[i]) << '\n';
        }
      }
    }
    files.kld_series.push_back(kld_path);

    std::size_t kl_events = 0, lost_events = 0;
    for (const auto& ev : events) {
      if (ev.signal_id != link) continue;
      (ev.kind == detect::EventKind::kl_change ? kl_events : lost_events)++;
    }
    summary << link << ',' << n << ',' << loss << ',';
    summary << (oss_n ? io::format_double(oss_sum / oss_n) : "") << ','
            << (oss_n ? io::format_double(oss_min) : "") << ','
            << (oss_n ? io::format_double(oss_max) : "") << ','
            << (ber_n ? io::format_double(ber_sum / ber_n) : "") << ',' << kl_events << ','
            << lost_events << '\n';
  }
  if (summary.fail()) throw std::runtime_error("write failure on " + files.summary.string());
  return files;
}

}  // namespace ips::report
