#include "gw/net/coap_codec.hpp"

#include <algorithm>
#include <cstdio>

namespace gw::net::coap {
namespace {

void put_ext(Bytes& out, std::uint32_t v) {
    if (v >= 269) {
        std::uint32_t e = v - 269;
        out.push_back(static_cast<std::uint8_t>(e >> 8));
        out.push_back(static_cast<std::uint8_t>(e & 0xFF));
    } else if (v >= 13) {
        out.push_back(static_cast<std::uint8_t>(v - 13));
    }
}

std::uint8_t nibble(std::uint32_t v) {
    if (v >= 269) return 14;
    if (v >= 13) return 13;
    return static_cast<std::uint8_t>(v);
}

}  // namespace

void Message::add_option(std::uint16_t number, Bytes value) {
    auto pos = std::upper_bound(options.begin(), options.end(), number,
                                [](std::uint16_t n, const Option& o) { return n < o.number; });
    options.insert(pos, Option{number, std::move(value)});
}

void Message::add_uint_option(std::uint16_t number, std::uint32_t value) {
    add_option(number, encode_uint(value));
}

std::optional<std::uint32_t> Message::uint_option(std::uint16_t number) const {
    for (const auto& o : options) {
        if (o.number == number) return decode_uint(o.value);
    }
    return std::nullopt;
}

std::string Message::path() const {
    std::string p;
    for (const auto& o : options) {
        if (o.number == option::UriPath) {
            p += '/';
            p.append(o.value.begin(), o.value.end());
        }
    }
    return p.empty() ? "/" : p;
}

void Message::set_path(const std::string& path) {
    options.erase(std::remove_if(options.begin(), options.end(),
                                 [](const Option& o) { return o.number == option::UriPath; }),
                  options.end());
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i] == '/') {
            ++i;
            continue;
        }
        std::size_t j = path.find('/', i);
        if (j == std::string::npos) j = path.size();
        add_option(option::UriPath, Bytes(path.begin() + static_cast<std::ptrdiff_t>(i),
                                          path.begin() + static_cast<std::ptrdiff_t>(j)));
        i = j;
    }
}

Bytes encode_uint(std::uint32_t v) {
    Bytes out;
    while (v > 0) {
        out.insert(out.begin(), static_cast<std::uint8_t>(v & 0xFF));
        v >>= 8;
    }
    return out;
}

std::uint32_t decode_uint(const Bytes& b) {
    if (b.size() > 4) throw ProtocolError("uint option longer than 4 bytes");
    std::uint32_t v = 0;
    for (auto x : b) v = (v << 8) | x;
    return v;
}

Bytes encode(const Message& m) {
    if (m.token.size() > 8) throw ProtocolError("token longer than 8 bytes");
    if (m.code == code::Empty && (!m.token.empty() || !m.options.empty() || !m.payload.empty())) {
        throw ProtocolError("empty message with content");
    }
    Bytes out;
    out.push_back(static_cast<std::uint8_t>(0x40 | (static_cast<std::uint8_t>(m.type) << 4) |
                                            m.token.size()));
    out.push_back(m.code);
    out.push_back(static_cast<std::uint8_t>(m.message_id >> 8));
    out.push_back(static_cast<std::uint8_t>(m.message_id & 0xFF));
    out.insert(out.end(), m.token.begin(), m.token.end());
    std::uint16_t last = 0;
    for (const auto& o : m.options) {
        if (o.number < last) throw ProtocolError("options out of order");
        std::uint32_t delta = o.number - last;
        std::uint32_t len = static_cast<std::uint32_t>(o.value.size());
        if (len > 65535 + 269) throw ProtocolError("option too long");
        out.push_back(static_cast<std::uint8_t>((nibble(delta) << 4) | nibble(len)));
        put_ext(out, delta);
        put_ext(out, len);
        out.insert(out.end(), o.value.begin(), o.value.end());
        last = o.number;
    }
    if (!m.payload.empty()) {
        out.push_back(0xFF);
        out.insert(out.end(), m.payload.begin(), m.payload.end());
    }
    return out;
}

Message decode(const std::uint8_t* data, std::size_t size) {
    if (size < 4) throw ProtocolError("datagram shorter than CoAP header");
    if ((data[0] >> 6) != 1) throw ProtocolError("unsupported CoAP version");
    Message m;
    m.type = static_cast<Type>((data[0] >> 4) & 0x03);
    std::size_t tkl = data[0] & 0x0F;
    if (tkl > 8) throw ProtocolError("reserved token length");
    m.code = data[1];
    m.message_id = static_cast<std::uint16_t>((data[2] << 8) | data[3]);
    std::size_t i = 4;
    if (i + tkl > size) throw ProtocolError("truncated token");
    m.token.assign(data + i, data + i + tkl);
    i += tkl;
    if (m.code == code::Empty && size != 4) throw ProtocolError("empty message with content");

    auto ext = [&](std::uint32_t n) -> std::uint32_t {
        if (n < 13) return n;
        if (n == 13) {
            if (i >= size) throw ProtocolError("truncated option");
            return data[i++] + 13u;
        }
        if (n == 14) {
            if (i + 2 > size) throw ProtocolError("truncated option");
            std::uint32_t v = (data[i] << 8) | data[i + 1];
            i += 2;
            return v + 269u;
        }
        throw ProtocolError("reserved option nibble 15");
    };

    std::uint32_t number = 0;
    while (i < size) {
        if (data[i] == 0xFF) {
            ++i;
            if (i == size) throw ProtocolError("payload marker without payload");
            m.payload.assign(data + i, data + size);
            break;
        }
        std::uint8_t b = data[i++];
        std::uint32_t delta = ext(b >> 4);
        std::uint32_t len = ext(b & 0x0F);
        number += delta;
        if (number > 0xFFFF) throw ProtocolError("option number out of range");
        if (i + len > size) throw ProtocolError("truncated option value");
        m.options.push_back(Option{static_cast<std::uint16_t>(number), Bytes(data + i, data + i + len)});
        i += len;
    }
    return m;
}

std::string code_string(std::uint8_t c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%d.%02d", c >> 5, c & 0x1F);
    return buf;
}

std::vector<std::string> parse_link_format(const std::string& text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while ((i = text.find('<', i)) != std::string::npos) {
        std::size_t j = text.find('>', i);
        if (j == std::string::npos) break;
        out.push_back(text.substr(i + 1, j - i - 1));
        i = j + 1;
    }
    return out;
}

}  // namespace gw::net::coap
