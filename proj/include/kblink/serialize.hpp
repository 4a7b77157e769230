#pragma once
// Bit-exact binary round trips for checkpoints and the entity index.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "kblink/biencoder.hpp"
#include "kblink/crossencoder.hpp"
#include "kblink/encoder.hpp"
#include "kblink/error.hpp"
#include "kblink/index.hpp"

namespace kblink {
namespace detail {

inline void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint64_t read_u64(std::istream& in, const std::string& what) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw DataError("truncated file while reading " + what);
    return v;
}

inline void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline double read_f64(std::istream& in, const std::string& what) {
    double v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw DataError("truncated file while reading " + what);
    return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const std::string& what) {
    std::uint64_t n = read_u64(in, what);
    std::string s(n, '\0');
    if (n && !in.read(s.data(), static_cast<std::streamsize>(n)))
        throw DataError("truncated file while reading " + what);
    return s;
}

inline void write_doubles(std::ostream& out, const std::vector<double>& v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::vector<double> read_doubles(std::istream& in, const std::string& what) {
    std::uint64_t n = read_u64(in, what);
    std::vector<double> v(n);
    if (n && !in.read(reinterpret_cast<char*>(v.data()),
                      static_cast<std::streamsize>(n * sizeof(double))))
        throw DataError("truncated file while reading " + what);
    return v;
}

inline void write_magic(std::ostream& out, const char magic[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char magic[5], const std::string& path) {
    char buf[4];
    if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
        throw DataError(path + ": wrong or missing file magic (expected " + magic + ")");
}

inline void write_params_body(std::ostream& out, const EncoderParams& p) {
    write_u64(out, p.vocab_size());
    write_u64(out, p.d);
    write_u64(out, p.init_seed);
    write_doubles(out, p.embedding.a);
    write_doubles(out, p.proj_weight.a);
    write_doubles(out, p.proj_bias);
}

inline EncoderParams read_params_body(std::istream& in, const std::string& path) {
    EncoderParams p;
    std::uint64_t vocab_size = read_u64(in, path + " vocab_size");
    p.d = read_u64(in, path + " d");
    p.init_seed = read_u64(in, path + " init_seed");
    p.embedding = Mat(vocab_size, p.d);
    p.embedding.a = read_doubles(in, path + " embedding");
    if (p.embedding.a.size() != vocab_size * p.d) throw DataError(path + ": embedding size mismatch");
    p.proj_weight = Mat(p.d, p.d);
    p.proj_weight.a = read_doubles(in, path + " proj_weight");
    if (p.proj_weight.a.size() != p.d * p.d) throw DataError(path + ": proj_weight size mismatch");
    p.proj_bias = read_doubles(in, path + " proj_bias");
    if (p.proj_bias.size() != p.d) throw DataError(path + ": proj_bias size mismatch");
    return p;
}

} // namespace detail

inline void save_params(const std::string& path, const EncoderParams& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write params file: " + path);
    detail::write_magic(out, "KBEP");
    detail::write_params_body(out, p);
}

inline EncoderParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open params file: " + path);
    detail::expect_magic(in, "KBEP", path);
    return detail::read_params_body(in, path);
}

struct Checkpoint {
    BiEncoderModel model;
    VariantConfig variant;
    TrainConfig train;
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint file: " + path);
    detail::write_magic(out, "KBCK");
    detail::write_string(out, ck.variant.name);
    detail::write_u64(out, (ck.variant.train_context ? 1u : 0u) |
                               (ck.variant.train_candidate ? 2u : 0u) |
                               (ck.variant.overlap_stage ? 4u : 0u) |
                               (ck.variant.augmentation ? 8u : 0u));
    detail::write_f64(out, ck.variant.lambda_mse);
    detail::write_u64(out, ck.train.batch_size);
    detail::write_f64(out, ck.train.learning_rate);
    detail::write_u64(out, ck.train.epochs);
    detail::write_u64(out, ck.train.seed);
    detail::write_u64(out, ck.train.top_k);
    detail::write_u64(out, ck.train.max_len);
    detail::write_u64(out, ck.train.literal_negatives ? 1 : 0);
    detail::write_params_body(out, ck.model.context_params);
    detail::write_params_body(out, ck.model.candidate_params);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint file: " + path);
    detail::expect_magic(in, "KBCK", path);
    Checkpoint ck;
    ck.variant.name = detail::read_string(in, path + " variant name");
    std::uint64_t flags = detail::read_u64(in, path + " variant flags");
    ck.variant.train_context = flags & 1;
    ck.variant.train_candidate = flags & 2;
    ck.variant.overlap_stage = flags & 4;
    ck.variant.augmentation = flags & 8;
    ck.variant.lambda_mse = detail::read_f64(in, path + " lambda_mse");
    ck.train.batch_size = detail::read_u64(in, path + " batch_size");
    ck.train.learning_rate = detail::read_f64(in, path + " learning_rate");
    ck.train.epochs = detail::read_u64(in, path + " epochs");
    ck.train.seed = detail::read_u64(in, path + " seed");
    ck.train.top_k = detail::read_u64(in, path + " top_k");
    ck.train.max_len = detail::read_u64(in, path + " max_len");
    ck.train.literal_negatives = detail::read_u64(in, path + " literal_negatives") != 0;
    ck.model.context_params = detail::read_params_body(in, path + " context");
    ck.model.candidate_params = detail::read_params_body(in, path + " candidate");
    return ck;
}

inline void save_cross_encoder(const std::string& path, const CrossEncoderModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write cross-encoder file: " + path);
    detail::write_magic(out, "KBXE");
    detail::write_params_body(out, m.encoder_params);
    detail::write_doubles(out, m.w);
}

inline CrossEncoderModel load_cross_encoder(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open cross-encoder file: " + path);
    detail::expect_magic(in, "KBXE", path);
    CrossEncoderModel m;
    m.encoder_params = detail::read_params_body(in, path);
    m.w = detail::read_doubles(in, path + " w");
    if (m.w.size() != m.encoder_params.d) throw DataError(path + ": weight size mismatch");
    return m;
}

inline void save_index(const std::string& path, const EntityIndex& index) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write index file: " + path);
    detail::write_magic(out, "KBIX");
    detail::write_u64(out, index.vectors.rows);
    detail::write_u64(out, index.vectors.cols);
    out.write(reinterpret_cast<const char*>(index.vectors.a.data()),
              static_cast<std::streamsize>(index.vectors.a.size() * sizeof(double)));
    for (std::size_t ord : index.ordinals) detail::write_u64(out, ord);
}

inline EntityIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path);
    detail::expect_magic(in, "KBIX", path);
    EntityIndex index;
    std::uint64_t rows = detail::read_u64(in, path + " rows");
    std::uint64_t cols = detail::read_u64(in, path + " cols");
    index.vectors = Mat(rows, cols);
    if (rows * cols != 0 &&
        !in.read(reinterpret_cast<char*>(index.vectors.a.data()),
                 static_cast<std::streamsize>(rows * cols * sizeof(double))))
        throw DataError(path + ": truncated vector block");
    index.ordinals.resize(rows);
    for (std::size_t i = 0; i < rows; ++i)
        index.ordinals[i] = detail::read_u64(in, path + " ordinal");
    return index;
}

} // namespace kblink
