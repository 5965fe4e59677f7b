#include "ips/strain_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ips::strain {

namespace {

Strain checked_strain(double value, const char* what) {
  if (!std::isfinite(value) || std::abs(value) >= kMaxStrain) {
    throw std::invalid_argument(std::string(what) + ": strain " + std::to_string(value) +
                                " outside +/-" + std::to_string(kMaxStrain) + " (fiber breaks)");
  }
  return Strain{value};
}

void check_gauge(double gauge_length_m) {
  if (!(gauge_length_m > 0)) {
    throw std::invalid_argument("gauge length must be > 0 m");
  }
}

void check_k(PhotoelasticConstant k) {
  if (!(k.nstrain_m_per_rad > 0)) {
    throw std::invalid_argument("photoelastic constant must be > 0");
  }
}

}  // namespace

void FiberGeometry::validate() const {
  if (!(bare_diameter_um > 0)) throw std::invalid_argument("fiber diameter must be > 0");
  if (!(youngs_modulus_pa > 0)) throw std::invalid_argument("Young's modulus must be > 0");
}

Strain strain_from_load(double mass_g, const FiberGeometry& geom, double gravity) {
  if (!(mass_g >= 0)) {
    throw std::invalid_argument("strain_from_load: mass must be >= 0 g");
  }
  geom.validate();
  const double force_n = (mass_g / 1000.0) * gravity;
  const double radius_m = geom.bare_diameter_um * 1e-6 / 2.0;
  const double area_m2 = std::numbers::pi * radius_m * radius_m;
  return checked_strain((force_n / area_m2) / geom.youngs_modulus_pa, "strain_from_load");
}

double phase_change_rad(Strain strain, double gauge_length_m, PhotoelasticConstant k) {
  check_gauge(gauge_length_m);
  check_k(k);
  // K carries nanostrain-meters per radian, so work in nanostrain.
  const double strain_nstrain = strain.value * 1e9;
  return strain_nstrain * gauge_length_m / k.nstrain_m_per_rad;
}

Strain strain_from_phase(double delta_phi_rad, double gauge_length_m, PhotoelasticConstant k) {
  check_gauge(gauge_length_m);
  check_k(k);
  if (!std::isfinite(delta_phi_rad)) {
    throw std::invalid_argument("strain_from_phase: phase must be finite");
  }
  const double strain_nstrain = k.nstrain_m_per_rad * delta_phi_rad / gauge_length_m;
  return checked_strain(strain_nstrain * 1e-9, "strain_from_phase");
}

bool exceeds_critical_phase(double delta_phi_rad, Modulation modulation) {
  if (!std::isfinite(delta_phi_rad)) {
    throw std::invalid_argument("exceeds_critical_phase: phase must be finite");
  }
  switch (modulation) {
    case Modulation::qpsk:
      return std::abs(delta_phi_rad) >= kCriticalPhaseQpskRad;
  }
  throw std::logic_error("exceeds_critical_phase: modulation not implemented");
}

}  // namespace ips::strain
