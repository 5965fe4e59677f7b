#pragma once

// Minimal SNMP v2c codec: GET / GET-NEXT / RESPONSE PDUs with INTEGER,
// OCTET STRING, NULL, OID and the v2c exception varbind values, encoded
// with ASN.1 basic encoding rules. Enough protocol to poll a transport
// device (or our mock agent) for scalar OIDs over UDP.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ips::snmp {

class decode_error : public std::runtime_error {
 public:
  explicit decode_error(const std::string& what) : std::runtime_error("snmp decode: " + what) {}
};

// Dotted-decimal object identifier.
struct Oid {
  std::vector<std::uint32_t> arcs;

  static Oid parse(const std::string& dotted);  // throws std::invalid_argument
  std::string to_string() const;
  auto operator<=>(const Oid&) const = default;
};

enum class ValueType {
  integer,
  octet_string,
  null,
  oid,
  no_such_object,    // v2c exception: OID not served by the agent
  no_such_instance,  // v2c exception: object exists but has no value now
  end_of_mib_view,
};

struct Value {
  ValueType type = ValueType::null;
  std::int64_t int_value = 0;
  std::string bytes;  // octet_string payload
  Oid oid_value;

  static Value make_integer(std::int64_t v) { return {ValueType::integer, v, "", {}}; }
  static Value make_string(std::string s) { return {ValueType::octet_string, 0, std::move(s), {}}; }
  static Value make_null() { return {}; }
  static Value no_such_object() { return {ValueType::no_such_object, 0, "", {}}; }
  static Value no_such_instance() { return {ValueType::no_such_instance, 0, "", {}}; }
};

struct VarBind {
  Oid oid;
  Value value;
};

enum class PduType : std::uint8_t {
  get_request = 0xA0,
  get_next_request = 0xA1,
  response = 0xA2,
};

struct Pdu {
  PduType type = PduType::get_request;
  std::int32_t request_id = 0;
  std::int32_t error_status = 0;
  std::int32_t error_index = 0;
  std::vector<VarBind> bindings;
};

struct Message {
  std::int32_t version = 1;  // SNMPv2c
  std::string community = "public";
  Pdu pdu;
};

std::vector<std::uint8_t> encode(const Message& message);
Message decode(std::span<const std::uint8_t> datagram);  // throws decode_error

}  // namespace ips::snmp
