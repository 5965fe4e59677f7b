#include "ips/snmp.hpp"

#include <charconv>

namespace ips::snmp {

namespace {

// ASN.1 universal tags used by the v2c subset.
constexpr std::uint8_t kTagInteger = 0x02;
constexpr std::uint8_t kTagOctetString = 0x04;
constexpr std::uint8_t kTagNull = 0x05;
constexpr std::uint8_t kTagOid = 0x06;
constexpr std::uint8_t kTagSequence = 0x30;
constexpr std::uint8_t kTagNoSuchObject = 0x80;
constexpr std::uint8_t kTagNoSuchInstance = 0x81;
constexpr std::uint8_t kTagEndOfMibView = 0x82;

using Bytes = std::vector<std::uint8_t>;

void append_length(Bytes& out, std::size_t len) {
  if (len < 0x80) {
    out.push_back(static_cast<std::uint8_t>(len));
    return;
  }
  Bytes digits;
  while (len > 0) {
    digits.push_back(static_cast<std::uint8_t>(len & 0xFF));
    len >>= 8;
  }
  out.push_back(static_cast<std::uint8_t>(0x80 | digits.size()));
  out.insert(out.end(), digits.rbegin(), digits.rend());
}

void append_tlv(Bytes& out, std::uint8_t tag, const Bytes& content) {
  out.push_back(tag);
  append_length(out, content.size());
  out.insert(out.end(), content.begin(), content.end());
}

Bytes encode_integer(std::int64_t v) {
  // Two's complement, big endian, minimal length.
  Bytes digits;
  bool more = true;
  while (more) {
    digits.push_back(static_cast<std::uint8_t>(v & 0xFF));
    const std::uint8_t top = digits.back();
    v >>= 8;
    more = !((v == 0 && !(top & 0x80)) || (v == -1 && (top & 0x80)));
  }
  Bytes out;
  out.reserve(digits.size());
  out.insert(out.end(), digits.rbegin(), digits.rend());
  return out;
}

Bytes encode_oid_content(const Oid& oid) {
  if (oid.arcs.size() < 2 || oid.arcs[0] > 2 || oid.arcs[1] > 39) {
    throw std::invalid_argument("OID must start with two arcs, first <= 2, second <= 39");
  }
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(oid.arcs[0] * 40 + oid.arcs[1]));
  for (std::size_t i = 2; i < oid.arcs.size(); ++i) {
    std::uint32_t arc = oid.arcs[i];
    Bytes groups;
    do {
      groups.push_back(static_cast<std::uint8_t>(arc & 0x7F));
      arc >>= 7;
    } while (arc > 0);
    for (std::size_t g = groups.size(); g-- > 0;) {
      out.push_back(groups[g] | (g > 0 ? 0x80 : 0x00));
    }
  }
  return out;
}

Bytes encode_value(const Value& value) {
  Bytes out;
  switch (value.type) {
    case ValueType::integer:
      append_tlv(out, kTagInteger, encode_integer(value.int_value));
      break;
    case ValueType::octet_string:
      append_tlv(out, kTagOctetString, Bytes(value.bytes.begin(), value.bytes.end()));
      break;
    case ValueType::null:
      append_tlv(out, kTagNull, {});
      break;
    case ValueType::oid:
      append_tlv(out, kTagOid, encode_oid_content(value.oid_value));
      break;
    case ValueType::no_such_object:
      append_tlv(out, kTagNoSuchObject, {});
      break;
    case ValueType::no_such_instance:
      append_tlv(out, kTagNoSuchInstance, {});
      break;
    case ValueType::end_of_mib_view:
      append_tlv(out, kTagEndOfMibView, {});
      break;
  }
  return out;
}

struct Reader {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;

  std::uint8_t byte() {
    if (pos >= data.size()) throw decode_error("truncated datagram");
    return data[pos++];
  }

  std::size_t length() {
    std::uint8_t first = byte();
    if (!(first & 0x80)) return first;
    const std::size_t n = first & 0x7F;
    if (n == 0 || n > 4) throw decode_error("unsupported length-of-length");
    std::size_t len = 0;
    for (std::size_t i = 0; i < n; ++i) len = (len << 8) | byte();
    return len;
  }

  std::span<const std::uint8_t> content(std::size_t len) {
    if (pos + len > data.size()) throw decode_error("length overruns datagram");
    auto out = data.subspan(pos, len);
    pos += len;
    return out;
  }

  bool done() const { return pos >= data.size(); }
};

std::int64_t decode_integer(std::span<const std::uint8_t> content) {
  if (content.empty() || content.size() > 8) throw decode_error("bad INTEGER length");
  std::int64_t v = (content[0] & 0x80) ? -1 : 0;
  for (std::uint8_t b : content) v = (v << 8) | b;
  return v;
}

Oid decode_oid(std::span<const std::uint8_t> content) {
  if (content.empty()) throw decode_error("empty OID");
  Oid oid;
  oid.arcs.push_back(content[0] / 40 > 2 ? 2 : content[0] / 40);
  oid.arcs.push_back(content[0] - oid.arcs[0] * 40);
  std::uint32_t arc = 0;
  bool in_arc = false;
  for (std::size_t i = 1; i < content.size(); ++i) {
    arc = (arc << 7) | (content[i] & 0x7F);
    in_arc = true;
    if (!(content[i] & 0x80)) {
      oid.arcs.push_back(arc);
      arc = 0;
      in_arc = false;
    }
  }
  if (in_arc) throw decode_error("truncated OID arc");
  return oid;
}

std::int64_t expect_integer(Reader& r) {
  if (r.byte() != kTagInteger) throw decode_error("expected INTEGER");
  return decode_integer(r.content(r.length()));
}

Value decode_value(Reader& r) {
  const std::uint8_t tag = r.byte();
  auto content = r.content(r.length());
  Value v;
  switch (tag) {
    case kTagInteger:
      v.type = ValueType::integer;
      v.int_value = decode_integer(content);
      break;
    case kTagOctetString:
      v.type = ValueType::octet_string;
      v.bytes.assign(content.begin(), content.end());
      break;
    case kTagNull:
      v.type = ValueType::null;
      break;
    case kTagOid:
      v.type = ValueType::oid;
      v.oid_value = decode_oid(content);
      break;
    case kTagNoSuchObject:
      v.type = ValueType::no_such_object;
      break;
    case kTagNoSuchInstance:
      v.type = ValueType::no_such_instance;
      break;
    case kTagEndOfMibView:
      v.type = ValueType::end_of_mib_view;
      break;
    default:
      throw decode_error("unsupported value tag " + std::to_string(tag));
  }
  return v;
}

}  // namespace

Oid Oid::parse(const std::string& dotted) {
  if (dotted.empty()) throw std::invalid_argument("empty OID string");
  Oid oid;
  const char* p = dotted.data();
  const char* end = p + dotted.size();
  if (*p == '.') ++p;  // tolerate a leading dot
  while (p < end) {
    std::uint32_t arc = 0;
    auto [next, ec] = std::from_chars(p, end, arc);
    if (ec != std::errc() || next == p) {
      throw std::invalid_argument("bad OID '" + dotted + "'");
    }
    oid.arcs.push_back(arc);
    p = next;
    if (p < end) {
      if (*p != '.') throw std::invalid_argument("bad OID '" + dotted + "'");
      ++p;
      if (p == end) throw std::invalid_argument("bad OID '" + dotted + "' (trailing dot)");
    }
  }
  if (oid.arcs.size() < 2) throw std::invalid_argument("OID '" + dotted + "' needs >= 2 arcs");
  return oid;
}

std::string Oid::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    if (i > 0) out.push_back('.');
    out += std::to_string(arcs[i]);
  }
  return out;
}

std::vector<std::uint8_t> encode(const Message& message) {
  Bytes bindings;
  for (const VarBind& vb : message.pdu.bindings) {
    Bytes one;
    append_tlv(one, kTagOid, encode_oid_content(vb.oid));
    const Bytes value = encode_value(vb.value);
    one.insert(one.end(), value.begin(), value.end());
    append_tlv(bindings, kTagSequence, one);
  }

  Bytes pdu;
  append_tlv(pdu, kTagInteger, encode_integer(message.pdu.request_id));
  append_tlv(pdu, kTagInteger, encode_integer(message.pdu.error_status));
  append_tlv(pdu, kTagInteger, encode_integer(message.pdu.error_index));
  append_tlv(pdu, kTagSequence, bindings);

  Bytes body;
  append_tlv(body, kTagInteger, encode_integer(message.version));
  append_tlv(body, kTagOctetString, Bytes(message.community.begin(), message.community.end()));
  append_tlv(body, static_cast<std::uint8_t>(message.pdu.type), pdu);

  Bytes out;
  append_tlv(out, kTagSequence, body);
  return out;
}

Message decode(std::span<const std::uint8_t> datagram) {
  Reader outer{datagram};
  if (outer.byte() != kTagSequence) throw decode_error("expected message SEQUENCE");
  Reader msg{outer.content(outer.length())};

  Message out;
  out.version = static_cast<std::int32_t>(expect_integer(msg));

  if (msg.byte() != kTagOctetString) throw decode_error("expected community OCTET STRING");
  auto community = msg.content(msg.length());
  out.community.assign(community.begin(), community.end());

  const std::uint8_t pdu_tag = msg.byte();
  if (pdu_tag != static_cast<std::uint8_t>(PduType::get_request) &&
      pdu_tag != static_cast<std::uint8_t>(PduType::get_next_request) &&
      pdu_tag != static_cast<std::uint8_t>(PduType::response)) {
    throw decode_error("unsupported PDU type " + std::to_string(pdu_tag));
  }
  out.pdu.type = static_cast<PduType>(pdu_tag);
  Reader pdu{msg.content(msg.length())};

  out.pdu.request_id = static_cast<std::int32_t>(expect_integer(pdu));
  out.pdu.error_status = static_cast<std::int32_t>(expect_integer(pdu));
  out.pdu.error_index = static_cast<std::int32_t>(expect_integer(pdu));

  if (pdu.byte() != kTagSequence) throw decode_error("expected varbind list SEQUENCE");
  Reader bindings{pdu.content(pdu.length())};
  while (!bindings.done()) {
    if (bindings.byte() != kTagSequence) throw decode_error("expected varbind SEQUENCE");
    Reader vb{bindings.content(bindings.length())};
    VarBind bind;
    if (vb.byte() != kTagOid) throw decode_error("expected varbind OID");
    bind.oid = decode_oid(vb.content(vb.length()));
    bind.value = decode_value(vb);
    out.pdu.bindings.push_back(std::move(bind));
  }
  return out;
}

}  // namespace ips::snmp
