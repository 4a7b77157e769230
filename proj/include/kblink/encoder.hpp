#pragma once
// Trainable toy text encoder: mean-pooled embeddings -> affine -> tanh.
// Ships exact analytic gradients plus a central-difference checker.

#include <cmath>
#include <cstdint>
#include <vector>

#include "kblink/error.hpp"
#include "kblink/rng.hpp"
#include "kblink/tokenizer.hpp"
#include "kblink/types.hpp"

namespace kblink {

struct EncoderParams {
    Mat embedding;   // vocab_size x d
    Mat proj_weight; // d x d
    Vec proj_bias;   // d
    std::size_t d = 0;
    std::uint64_t init_seed = 0;

    std::size_t vocab_size() const { return embedding.rows; }
    std::size_t param_count() const {
        return embedding.a.size() + proj_weight.a.size() + proj_bias.size();
    }
};

struct EncoderGrad {
    Mat embedding;
    Mat proj_weight;
    Vec proj_bias;

    static EncoderGrad zeros_like(const EncoderParams& p) {
        EncoderGrad g;
        g.embedding = Mat(p.embedding.rows, p.embedding.cols);
        g.proj_weight = Mat(p.proj_weight.rows, p.proj_weight.cols);
        g.proj_bias.assign(p.proj_bias.size(), 0.0);
        return g;
    }

    void add_scaled(const EncoderGrad& o, double s) {
        for (std::size_t i = 0; i < embedding.a.size(); ++i) embedding.a[i] += s * o.embedding.a[i];
        for (std::size_t i = 0; i < proj_weight.a.size(); ++i)
            proj_weight.a[i] += s * o.proj_weight.a[i];
        for (std::size_t i = 0; i < proj_bias.size(); ++i) proj_bias[i] += s * o.proj_bias[i];
    }
};

inline EncoderParams init_params(std::size_t vocab_size, std::size_t d, std::uint64_t seed) {
    if (vocab_size < static_cast<std::size_t>(kNumReserved))
        throw ConfigError("init_params: vocab_size below reserved token count");
    if (d < 2) throw ConfigError("init_params: d must be at least 2");
    EncoderParams p;
    p.d = d;
    p.init_seed = seed;
    p.embedding = Mat(vocab_size, d);
    p.proj_weight = Mat(d, d);
    p.proj_bias.assign(d, 0.0);
    Rng rng(seed);
    for (auto& x : p.embedding.a) x = rng.uniform(-0.05, 0.05);
    for (auto& x : p.proj_weight.a) x = rng.uniform(-0.05, 0.05);
    return p;
}

namespace detail {

// Mean of embedding rows over non-PAD ids; all-PAD input pools to zero.
inline Vec mean_pool(const EncoderParams& p, const TokenSeq& seq) {
    Vec m(p.d, 0.0);
    std::size_t n = 0;
    for (int id : seq.ids) {
        if (id == PAD) continue;
        if (id < 0 || static_cast<std::size_t>(id) >= p.vocab_size())
            throw DataError("encode: token id out of range");
        const double* row = p.embedding.row(static_cast<std::size_t>(id));
        for (std::size_t j = 0; j < p.d; ++j) m[j] += row[j];
        ++n;
    }
    if (n > 0)
        for (auto& x : m) x /= static_cast<double>(n);
    return m;
}

} // namespace detail

inline Vec encode(const EncoderParams& p, const TokenSeq& seq) {
    Vec m = detail::mean_pool(p, seq);
    Vec v(p.d, 0.0);
    for (std::size_t i = 0; i < p.d; ++i) {
        double h = p.proj_bias[i] + dot(p.proj_weight.row(i), m.data(), p.d);
        v[i] = std::tanh(h);
    }
    return v;
}

// Gradient of (upstream . encode(p, seq)) in every parameter.
inline EncoderGrad encode_backward(const EncoderParams& p, const TokenSeq& seq,
                                   const Vec& upstream) {
    if (upstream.size() != p.d) throw DataError("encode_backward: upstream dimension mismatch");
    Vec m = detail::mean_pool(p, seq);
    Vec v(p.d, 0.0), dh(p.d, 0.0);
    for (std::size_t i = 0; i < p.d; ++i) {
        double h = p.proj_bias[i] + dot(p.proj_weight.row(i), m.data(), p.d);
        v[i] = std::tanh(h);
        dh[i] = upstream[i] * (1.0 - v[i] * v[i]);
    }
    EncoderGrad g = EncoderGrad::zeros_like(p);
    g.proj_bias = dh;
    for (std::size_t i = 0; i < p.d; ++i) {
        double* wrow = g.proj_weight.row(i);
        for (std::size_t j = 0; j < p.d; ++j) wrow[j] = dh[i] * m[j];
    }
    Vec dm(p.d, 0.0);
    for (std::size_t j = 0; j < p.d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < p.d; ++i) s += p.proj_weight(i, j) * dh[i];
        dm[j] = s;
    }
    std::size_t n = 0;
    for (int id : seq.ids)
        if (id != PAD) ++n;
    if (n > 0) {
        double inv_n = 1.0 / static_cast<double>(n);
        for (int id : seq.ids) {
            if (id == PAD) continue;
            double* erow = g.embedding.row(static_cast<std::size_t>(id));
            for (std::size_t j = 0; j < p.d; ++j) erow[j] += inv_n * dm[j];
        }
    }
    return g;
}

// Max relative error of the analytic gradient against central differences.
// Sweeps every coordinate up to 10k parameters, otherwise a seeded sample.
inline double grad_check(const EncoderParams& params, const TokenSeq& seq, const Vec& upstream,
                         double eps) {
    if (eps <= 0.0) throw ConfigError("grad_check: eps must be positive");
    EncoderGrad analytic = encode_backward(params, seq, upstream);
    EncoderParams work = params;
    struct Span {
        double* p;
        const double* g;
        std::size_t n;
    };
    const Span spans[3] = {
        {work.embedding.a.data(), analytic.embedding.a.data(), work.embedding.a.size()},
        {work.proj_weight.a.data(), analytic.proj_weight.a.data(), work.proj_weight.a.size()},
        {work.proj_bias.data(), analytic.proj_bias.data(), work.proj_bias.size()},
    };
    auto loss = [&]() { return dot(upstream, encode(work, seq)); };
    auto check_one = [&](const Span& s, std::size_t i, double& max_err) {
        double saved = s.p[i];
        s.p[i] = saved + eps;
        double up = loss();
        s.p[i] = saved - eps;
        double down = loss();
        s.p[i] = saved;
        double numeric = (up - down) / (2.0 * eps);
        double a = s.g[i];
        double err = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1.0});
        if (err > max_err) max_err = err;
    };
    double max_err = 0.0;
    std::size_t total = params.param_count();
    if (total <= 10000) {
        for (const Span& s : spans)
            for (std::size_t i = 0; i < s.n; ++i) check_one(s, i, max_err);
    } else {
        Rng rng(params.init_seed ^ 0x9e3779b97f4a7c15ULL);
        std::size_t samples = std::max<std::size_t>(1000, total / 100);
        for (std::size_t k = 0; k < samples; ++k) {
            std::size_t idx = rng.uniform_index(total);
            for (const Span& s : spans) {
                if (idx < s.n) {
                    check_one(s, idx, max_err);
                    break;
                }
                idx -= s.n;
            }
        }
    }
    return max_err;
}

} // namespace kblink
