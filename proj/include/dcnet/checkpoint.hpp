#ifndef DCNET_CHECKPOINT_HPP
#define DCNET_CHECKPOINT_HPP

// Binary checkpoint layout (all integers little-endian):
//
//   8 bytes   magic "DCNETCKP"
//   u32       format version (1)
//   u32 n, n bytes        config JSON (UTF-8)
//   u32 count, then per token: u32 n, n bytes       vocabulary, index order
//   u32 count, then per parameter:
//       u32 n, n bytes    name
//       u8                group (0 = embedding, 1 = other)
//       u32 rank, rank x u64 dims
//       prod(dims) x f32  values, IEEE-754 binary32
//   u32       CRC-32 of every preceding byte
//
// Files are written to `<path>.tmp` and renamed into place.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcnet/config.hpp"
#include "dcnet/data.hpp"
#include "dcnet/error.hpp"
#include "dcnet/model.hpp"
#include "dcnet/tensor.hpp"

namespace dcnet {

inline constexpr char kCheckpointMagic[8] = {'D', 'C', 'N', 'E', 'T', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointParam {
    std::string name;
    ParamGroup group = ParamGroup::Other;
    Tensor<float> tensor;
};

struct Checkpoint {
    nlohmann::json config;
    Vocabulary vocab;
    std::vector<CheckpointParam> params;

    ModelConfig model_config() const { return model_config_from_json(config); }
};

namespace detail {

class ByteWriter {
public:
    void raw(const void* p, std::size_t n) {
        auto c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    const std::vector<char>& bytes() const { return buf_; }

private:
    std::vector<char> buf_;
};

class ByteReader {
public:
    ByteReader(const char* p, std::size_t n) : p_(p), end_(p + n) {}
    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end_ - p_) < n) throw DataError("checkpoint truncated");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(*p_++);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(*p_++)) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(*p_++)) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str() {
        auto n = u32();
        need(n);
        std::string s(p_, n);
        p_ += n;
        return s;
    }
    bool done() const { return p_ == end_; }

private:
    const char* p_;
    const char* end_;
};

}  // namespace detail

// Values are stored as binary32; a float64 model is rounded on save.
template <class T>
void save_checkpoint(const DCNet<T>& model, const Vocabulary& vocab, const nlohmann::json& config,
                     const std::filesystem::path& path) {
    if (vocab.size() != model.vocab_size())
        throw std::invalid_argument("save_checkpoint: vocabulary size does not match the embedding matrix");
    detail::ByteWriter w;
    w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
    w.u32(kCheckpointVersion);
    nlohmann::json cfg = config;
    cfg.update(model_config_json(model.config()));
    w.str(cfg.dump());
    w.u32(static_cast<std::uint32_t>(vocab.size()));
    for (const auto& t : vocab.tokens()) w.str(t);
    w.u32(static_cast<std::uint32_t>(model.params().size()));
    for (const auto& p : model.params()) {
        w.str(p.name);
        w.u8(p.group == ParamGroup::Embedding ? 0 : 1);
        w.u32(static_cast<std::uint32_t>(p.tensor.rank()));
        for (auto d : p.tensor.shape()) w.u64(d);
        for (T v : p.tensor.values()) w.f32(static_cast<float>(v));
    }
    const auto& bytes = w.bytes();
    std::uint32_t crc = crc32_of(std::string_view(bytes.data(), bytes.size()));

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write checkpoint: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        detail::ByteWriter tail;
        tail.u32(crc);
        out.write(tail.bytes().data(), 4);
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof kCheckpointMagic + 8) throw DataError("checkpoint truncated: " + path.string());
    if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        throw DataError("not a checkpoint file: " + path.string());

    const std::size_t body = bytes.size() - 4;
    detail::ByteReader tail(bytes.data() + body, 4);
    if (crc32_of(std::string_view(bytes.data(), body)) != tail.u32())
        throw DataError("checkpoint checksum mismatch: " + path.string());

    detail::ByteReader r(bytes.data() + sizeof kCheckpointMagic, body - sizeof kCheckpointMagic);
    auto version = r.u32();
    if (version != kCheckpointVersion)
        throw DataError("checkpoint format version " + std::to_string(version) + " unsupported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    Checkpoint ck;
    try {
        ck.config = nlohmann::json::parse(r.str());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint config is not valid JSON: ") + e.what());
    }
    std::vector<std::string> tokens(r.u32());
    for (auto& t : tokens) t = r.str();
    ck.vocab = Vocabulary(std::move(tokens));
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointParam p;
        p.name = r.str();
        p.group = r.u8() == 0 ? ParamGroup::Embedding : ParamGroup::Other;
        Shape shape(r.u32());
        for (auto& d : shape) d = r.u64();
        std::vector<float> vals(shape_size(shape));
        r.need(vals.size() * 4);
        for (auto& v : vals) v = r.f32();
        p.tensor = Tensor<float>(std::move(shape), std::move(vals));
        ck.params.push_back(std::move(p));
    }
    if (!r.done()) throw DataError("trailing bytes in checkpoint: " + path.string());
    return ck;
}

// Copies checkpoint values into an already-constructed model. Every
// parameter must be present with the same shape.
template <class T>
void load_parameters(DCNet<T>& model, const Checkpoint& ck) {
    auto& store = model.params();
    if (ck.params.size() != store.size())
        throw ShapeError("checkpoint has " + std::to_string(ck.params.size()) + " parameters, model has " +
                         std::to_string(store.size()));
    for (const auto& cp : ck.params) {
        if (!store.contains(cp.name)) throw ShapeError("checkpoint parameter '" + cp.name + "' not in model");
        auto& t = store.tensor(cp.name);
        if (t.shape() != cp.tensor.shape())
            throw ShapeError("shape mismatch for '" + cp.name + "': checkpoint " + shape_string(cp.tensor.shape()) +
                             ", model " + shape_string(t.shape()));
        std::transform(cp.tensor.values().begin(), cp.tensor.values().end(), t.values().begin(),
                       [](float v) { return static_cast<T>(v); });
    }
}

// Rebuilds the model described by the checkpoint's own config.
template <class T = float>
DCNet<T> model_from_checkpoint(const Checkpoint& ck) {
    DCNet<T> model(ck.model_config(), ck.vocab.size(), 0);
    load_parameters(model, ck);
    return model;
}

}  // namespace dcnet

#endif  // DCNET_CHECKPOINT_HPP
