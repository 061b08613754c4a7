#include "gw/interop/translator.hpp"

#include <mutex>

namespace gw::interop {
namespace {

using dsl::KindMismatch;

const Tuple& packet_of(const Value& msg, const char* fn) {
    const Value* packet = msg.is_record() ? msg.find("packet") : nullptr;
    if (packet == nullptr || !packet->is_tuple()) {
        throw KindMismatch(std::string(fn) + " needs a record with a 'packet' sequence");
    }
    return packet->as_tuple();
}

Value unpack_payload(const Value& msg) {
    const Tuple& packet = packet_of(msg, "unpack_payload");
    if (packet.empty() || !packet.back().is_record()) {
        throw KindMismatch("unpack_payload needs a keyed payload at the end of 'packet'");
    }
    Tuple parts;
    for (const auto& [label, v] : packet.back().as_record()) {
        parts.push_back(Tuple{label, v});
    }
    Tuple new_packet(packet.begin(), packet.end() - 1);
    new_packet.emplace_back(std::move(parts));

    Record out;
    for (const auto& [k, v] : msg.as_record()) {
        out.emplace_back(k, k == "packet" ? Value(new_packet) : v);
    }
    return out;
}

Value extract_packet(const Value& msg) {
    Tuple out = packet_of(msg, "extract_packet");
    Record rest;
    for (const auto& [k, v] : msg.as_record()) {
        if (k != "packet") rest.emplace_back(k, v);
    }
    out.emplace_back(std::move(rest));
    return out;
}

Value pack_properties(const Value& msg) {
    if (!msg.is_tuple() || msg.as_tuple().size() < 2 || !msg.as_tuple().back().is_record()) {
        throw KindMismatch("pack_properties needs a sequence ending in a property record");
    }
    const Tuple& seq = msg.as_tuple();
    const Value& props = seq.back();
    const Value* qos = props.find("qos");
    const Value* info = props.find("info");
    if (qos == nullptr || info == nullptr || !info->is_tuple() || info->as_tuple().empty()) {
        throw KindMismatch("pack_properties needs 'qos' and 'info' fields");
    }
    const Tuple& info_t = info->as_tuple();
    Tuple packed_props(info_t.begin() + 1, info_t.end());

    Tuple out(seq.begin(), seq.end() - 2);
    out.push_back(Tuple{*qos, Value(std::move(packed_props)), seq[seq.size() - 2]});
    return out;
}

Value label_packet(const Value& msg) {
    if (!msg.is_tuple() || msg.as_tuple().size() != 9) {
        throw KindMismatch("label_packet needs a 9-element packet sequence");
    }
    const Tuple& seq = msg.as_tuple();
    const Value& body = seq[8];
    if (!body.is_tuple() || body.as_tuple().size() != 3 || !body.as_tuple()[1].is_tuple() ||
        !seq[4].is_int()) {
        throw KindMismatch("label_packet needs a (qos, properties, payload) body");
    }
    const Tuple& props = body.as_tuple()[1].as_tuple();
    Tuple info{static_cast<std::int64_t>(props.size())};
    info.insert(info.end(), props.begin(), props.end());

    Tuple packet(seq.begin(), seq.begin() + 8);
    packet.push_back(body.as_tuple()[2]);

    // pos is the parse cursor; the whole packet is still unparsed there.
    return Record{
        {"command", seq[0]},
        {"qos", seq[2]},
        {"pos", Value(0)},
        {"mid", seq[7]},
        {"info", Value(std::move(info))},
        {"packet", Value(std::move(packet))},
        {"to_process", Value(mqtt_packet_length(seq[4].as_int()))},
    };
}

dsl::DslFunction<Value> message_fn(int index, const char* name, Value (*body)(const Value&)) {
    return {index, name, dsl::ValueKind::Message, dsl::ValueKind::Message, body};
}

}  // namespace

const dsl::Registry<Value>& interop_registry() {
    static const dsl::Registry<Value> registry(
        kInteropRegistryId,
        {
            message_fn(kUnpackPayload, "unpack_payload", unpack_payload),
            message_fn(kExtractPacket, "extract_packet", extract_packet),
            message_fn(kPackProperties, "pack_properties", pack_properties),
            message_fn(kLabelPacket, "label_packet", label_packet),
        },
        [](const Value&) { return dsl::ValueKind::Message; });
    return registry;
}

NoProgram::NoProgram(Dialect src, Dialect dst)
    : std::runtime_error("no translation program for " + std::string(to_string(src)) + " -> " +
                         std::string(to_string(dst))) {}

Translator::Translator(dsl::SynthesisOptions options) : options_(options) {}

TranslationProgram Translator::learn_translation(std::span<const dsl::IoExample<Value>> examples,
                                                 Dialect src, Dialect dst) {
    std::unique_lock lock(mutex_);
    ++synthesis_runs_;
    auto result = dsl::synthesize_and_learn(examples, interop_registry(), q_[{src, dst}], options_);
    if (!result.program) {
        throw TranslationNotFound("no registry I pipeline translates " +
                                  std::string(to_string(src)) + " -> " +
                                  std::string(to_string(dst)));
    }
    TranslationProgram tp{*result.program, src, dst};
    cache_[{src, dst}] = tp;
    return tp;
}

Value Translator::translate(const Value& msg, Dialect src, Dialect dst) const {
    if (src == dst) {
        return msg;
    }
    dsl::DslProgram program;
    {
        std::shared_lock lock(mutex_);
        auto it = cache_.find({src, dst});
        if (it == cache_.end()) {
            throw NoProgram(src, dst);
        }
        program = it->second.program;
    }
    return dsl::evaluate(interop_registry(), program, msg);
}

std::optional<TranslationProgram> Translator::find(Dialect src, Dialect dst) const {
    std::shared_lock lock(mutex_);
    auto it = cache_.find({src, dst});
    if (it == cache_.end()) return std::nullopt;
    return it->second;
}

void Translator::store(TranslationProgram program) {
    interop_registry().validate(program.program);
    std::unique_lock lock(mutex_);
    cache_[{program.source, program.target}] = std::move(program);
}

std::size_t Translator::synthesis_runs() const {
    std::shared_lock lock(mutex_);
    return synthesis_runs_;
}

dsl::QTable Translator::q_table(Dialect src, Dialect dst) const {
    std::shared_lock lock(mutex_);
    auto it = q_.find({src, dst});
    return it == q_.end() ? dsl::QTable{} : it->second;
}

}  // namespace gw::interop
