#include "gw/net/mqtt_codec.hpp"

#include <string_view>

namespace gw::net::mqtt {
namespace {

constexpr std::uint32_t kMaxRemaining = 268435455;

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_str(Bytes& out, const std::string& s) {
    if (s.size() > 0xFFFF) throw ProtocolError("string longer than 65535 bytes");
    put_u16(out, static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

Bytes frame(std::uint8_t header, const Bytes& body) {
    if (body.size() > kMaxRemaining) throw ProtocolError("packet too large");
    Bytes out{header};
    encode_varint(static_cast<std::uint32_t>(body.size()), out);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

class Reader {
public:
    Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}

    std::uint8_t u8() {
        need(1);
        return p_[i_++];
    }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>((p_[i_] << 8) | p_[i_ + 1]);
        i_ += 2;
        return v;
    }
    std::string str() {
        std::uint16_t len = u16();
        need(len);
        std::string s(reinterpret_cast<const char*>(p_ + i_), len);
        i_ += len;
        return s;
    }
    Bytes rest() {
        Bytes b(p_ + i_, p_ + n_);
        i_ = n_;
        return b;
    }
    bool done() const { return i_ == n_; }

private:
    void need(std::size_t k) const {
        if (i_ + k > n_) throw ProtocolError("truncated packet body");
    }
    const std::uint8_t* p_;
    std::size_t n_;
    std::size_t i_ = 0;
};

void expect_flags(std::uint8_t header, std::uint8_t flags, const char* what) {
    if ((header & 0x0F) != flags) throw ProtocolError(std::string("bad fixed-header flags for ") + what);
}

Packet decode_body(std::uint8_t header, const std::uint8_t* body, std::size_t len) {
    Reader r(body, len);
    auto type = static_cast<PacketType>(header >> 4);
    Packet out;
    switch (type) {
        case PacketType::Connect: {
            expect_flags(header, 0, "CONNECT");
            if (r.str() != "MQTT") throw ProtocolError("unsupported protocol name");
            if (r.u8() != 4) throw ProtocolError("unsupported protocol level");
            std::uint8_t flags = r.u8();
            if (flags & 0x01) throw ProtocolError("reserved CONNECT flag set");
            Connect c;
            c.clean_session = flags & 0x02;
            c.keep_alive = r.u16();
            c.client_id = r.str();
            // Will, user name and password are accepted and ignored.
            if (flags & 0x04) {
                r.str();
                r.str();
            }
            if (flags & 0x80) r.str();
            if (flags & 0x40) r.str();
            out = c;
            break;
        }
        case PacketType::ConnAck: {
            expect_flags(header, 0, "CONNACK");
            ConnAck a;
            a.session_present = r.u8() & 0x01;
            a.return_code = r.u8();
            out = a;
            break;
        }
        case PacketType::Publish: {
            Publish p;
            p.dup = header & 0x08;
            p.qos = (header >> 1) & 0x03;
            p.retain = header & 0x01;
            if (p.qos > 2) throw ProtocolError("invalid QoS 3");
            p.topic = r.str();
            if (p.qos > 0) p.packet_id = r.u16();
            p.payload = r.rest();
            out = p;
            break;
        }
        case PacketType::PubAck:
            expect_flags(header, 0, "PUBACK");
            out = PubAck{r.u16()};
            break;
        case PacketType::Subscribe: {
            expect_flags(header, 2, "SUBSCRIBE");
            Subscribe s;
            s.packet_id = r.u16();
            while (!r.done()) {
                std::string f = r.str();
                std::uint8_t q = r.u8();
                if (q > 2) throw ProtocolError("invalid requested QoS");
                s.filters.emplace_back(std::move(f), q);
            }
            if (s.filters.empty()) throw ProtocolError("SUBSCRIBE without filters");
            out = s;
            break;
        }
        case PacketType::SubAck: {
            expect_flags(header, 0, "SUBACK");
            SubAck s;
            s.packet_id = r.u16();
            s.codes = r.rest();
            out = s;
            break;
        }
        case PacketType::PingReq:
            expect_flags(header, 0, "PINGREQ");
            out = PingReq{};
            break;
        case PacketType::PingResp:
            expect_flags(header, 0, "PINGRESP");
            out = PingResp{};
            break;
        case PacketType::Disconnect:
            expect_flags(header, 0, "DISCONNECT");
            out = Disconnect{};
            break;
        default:
            throw ProtocolError("unsupported packet type " + std::to_string(header >> 4));
    }
    if (!r.done()) throw ProtocolError("trailing bytes in packet");
    return out;
}

}  // namespace

void encode_varint(std::uint32_t value, Bytes& out) {
    if (value > kMaxRemaining) throw ProtocolError("remaining length too large");
    do {
        std::uint8_t b = value % 128;
        value /= 128;
        if (value > 0) b |= 0x80;
        out.push_back(b);
    } while (value > 0);
}

std::optional<std::pair<std::uint32_t, std::size_t>> decode_varint(const std::uint8_t* data,
                                                                    std::size_t size) {
    std::uint32_t value = 0;
    std::uint32_t mult = 1;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i >= size) return std::nullopt;
        value += (data[i] & 0x7F) * mult;
        if (!(data[i] & 0x80)) return std::make_pair(value, i + 1);
        mult *= 128;
    }
    throw ProtocolError("remaining length longer than 4 bytes");
}

Bytes encode(const Packet& packet) {
    return std::visit(
        [](const auto& p) -> Bytes {
            using T = std::decay_t<decltype(p)>;
            Bytes body;
            if constexpr (std::is_same_v<T, Connect>) {
                put_str(body, "MQTT");
                body.push_back(4);
                body.push_back(p.clean_session ? 0x02 : 0x00);
                put_u16(body, p.keep_alive);
                put_str(body, p.client_id);
                return frame(0x10, body);
            } else if constexpr (std::is_same_v<T, ConnAck>) {
                body = {static_cast<std::uint8_t>(p.session_present ? 1 : 0), p.return_code};
                return frame(0x20, body);
            } else if constexpr (std::is_same_v<T, Publish>) {
                if (p.qos > 2) throw ProtocolError("invalid QoS");
                put_str(body, p.topic);
                if (p.qos > 0) put_u16(body, p.packet_id);
                body.insert(body.end(), p.payload.begin(), p.payload.end());
                auto h = static_cast<std::uint8_t>(0x30 | (p.dup ? 0x08 : 0) | (p.qos << 1) |
                                                   (p.retain ? 1 : 0));
                return frame(h, body);
            } else if constexpr (std::is_same_v<T, PubAck>) {
                put_u16(body, p.packet_id);
                return frame(0x40, body);
            } else if constexpr (std::is_same_v<T, Subscribe>) {
                put_u16(body, p.packet_id);
                for (const auto& [f, q] : p.filters) {
                    put_str(body, f);
                    body.push_back(q);
                }
                return frame(0x82, body);
            } else if constexpr (std::is_same_v<T, SubAck>) {
                put_u16(body, p.packet_id);
                body.insert(body.end(), p.codes.begin(), p.codes.end());
                return frame(0x90, body);
            } else if constexpr (std::is_same_v<T, PingReq>) {
                return frame(0xC0, body);
            } else if constexpr (std::is_same_v<T, PingResp>) {
                return frame(0xD0, body);
            } else {
                return frame(0xE0, body);
            }
        },
        packet);
}

void Decoder::feed(const std::uint8_t* data, std::size_t size) {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    buf_.insert(buf_.end(), data, data + size);
}

std::optional<Packet> Decoder::next() {
    std::size_t avail = buf_.size() - pos_;
    if (avail < 2) return std::nullopt;
    auto len = decode_varint(buf_.data() + pos_ + 1, avail - 1);
    if (!len) return std::nullopt;
    std::size_t total = 1 + len->second + len->first;
    if (avail < total) return std::nullopt;
    std::uint8_t header = buf_[pos_];
    const std::uint8_t* body = buf_.data() + pos_ + 1 + len->second;
    pos_ += total;
    Packet p = decode_body(header, body, len->first);
    if (pos_ > 65536 && pos_ * 2 > buf_.size()) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
    }
    return p;
}

Packet decode(const Bytes& frame) {
    Decoder d;
    d.feed(frame.data(), frame.size());
    auto p = d.next();
    if (!p || d.buffered() != 0) throw ProtocolError("frame does not hold exactly one packet");
    return *p;
}

bool topic_matches(const std::string& filter, const std::string& topic) {
    std::size_t fi = 0, ti = 0;
    // '$'-topics are not matched by leading wildcards.
    if (!topic.empty() && topic[0] == '$' && !filter.empty() && (filter[0] == '#' || filter[0] == '+')) {
        return false;
    }
    for (;;) {
        std::size_t fe = filter.find('/', fi);
        std::size_t te = topic.find('/', ti);
        std::string_view f(filter.data() + fi, (fe == std::string::npos ? filter.size() : fe) - fi);
        std::string_view t(topic.data() + ti, (te == std::string::npos ? topic.size() : te) - ti);
        if (f == "#") return true;
        if (f != "+" && f != t) return false;
        bool f_end = fe == std::string::npos;
        bool t_end = te == std::string::npos;
        if (f_end || t_end) {
            if (f_end && t_end) return true;
            // "a/#" also matches "a".
            return t_end && filter.compare(fe, std::string::npos, "/#") == 0;
        }
        fi = fe + 1;
        ti = te + 1;
    }
}

const char* name(const Packet& p) {
    static const char* names[] = {"CONNECT", "CONNACK", "PUBLISH",  "PUBACK",    "SUBSCRIBE",
                                  "SUBACK",  "PINGREQ", "PINGRESP", "DISCONNECT"};
    return names[p.index()];
}

}  // namespace gw::net::mqtt
