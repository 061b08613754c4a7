#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gw::net::coap {

using Bytes = std::vector<std::uint8_t>;

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Type : std::uint8_t { Confirmable = 0, NonConfirmable = 1, Acknowledgement = 2, Reset = 3 };

/// Code as class * 32 + detail.
namespace code {
inline constexpr std::uint8_t Empty = 0x00;
inline constexpr std::uint8_t Get = 0x01;
inline constexpr std::uint8_t Post = 0x02;
inline constexpr std::uint8_t Put = 0x03;
inline constexpr std::uint8_t Delete = 0x04;
inline constexpr std::uint8_t Content = 0x45;     // 2.05
inline constexpr std::uint8_t Changed = 0x44;     // 2.04
inline constexpr std::uint8_t BadRequest = 0x80;  // 4.00
inline constexpr std::uint8_t NotFound = 0x84;    // 4.04
inline constexpr std::uint8_t MethodNotAllowed = 0x85;
}  // namespace code

namespace option {
inline constexpr std::uint16_t UriHost = 3;
inline constexpr std::uint16_t Observe = 6;
inline constexpr std::uint16_t UriPort = 7;
inline constexpr std::uint16_t UriPath = 11;
inline constexpr std::uint16_t ContentFormat = 12;
inline constexpr std::uint16_t UriQuery = 15;
}  // namespace option

namespace format {
inline constexpr std::uint32_t TextPlain = 0;
inline constexpr std::uint32_t LinkFormat = 40;
inline constexpr std::uint32_t Json = 50;
}  // namespace format

struct Option {
    std::uint16_t number = 0;
    Bytes value;
    friend bool operator==(const Option&, const Option&) = default;
};

struct Message {
    Type type = Type::Confirmable;
    std::uint8_t code = code::Empty;
    std::uint16_t message_id = 0;
    Bytes token;
    /// Kept sorted by number (stable for repeated options).
    std::vector<Option> options;
    Bytes payload;

    void add_option(std::uint16_t number, Bytes value);
    void add_uint_option(std::uint16_t number, std::uint32_t value);
    std::optional<std::uint32_t> uint_option(std::uint16_t number) const;
    /// Joined Uri-Path segments with a leading '/'.
    std::string path() const;
    void set_path(const std::string& path);

    friend bool operator==(const Message&, const Message&) = default;
};

Bytes encode(const Message& m);
Message decode(const std::uint8_t* data, std::size_t size);
inline Message decode(const Bytes& b) { return decode(b.data(), b.size()); }

Bytes encode_uint(std::uint32_t v);
std::uint32_t decode_uint(const Bytes& b);

std::string code_string(std::uint8_t c);

/// Paths from a CoRE link-format document ("</a/b>;obs,</c>").
std::vector<std::string> parse_link_format(const std::string& text);

}  // namespace gw::net::coap
