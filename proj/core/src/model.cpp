// SPDX-License-Identifier: Apache-2.0
#include "cipherpix/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cipherpix/common.hpp"
#include "cipherpix/parallel.hpp"
#include "cipherpix/rng.hpp"

namespace cipherpix {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

constexpr double kLnEps = 1e-5;

// y = x * W^T + b. x: [n x in], W: [out x in] row-major.
template <typename T>
void linear_forward(const RowMat<T>& x, CMapMat<T> w, const T* b, RowMat<T>& y) {
    y.noalias() = x * w.transpose();
    if (b != nullptr) {
        y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b, w.rows());
    }
}

// Accumulates dx, dW, db given dy.
template <typename T>
void linear_backward(const RowMat<T>& x, CMapMat<T> w, const RowMat<T>& dy, RowMat<T>* dx,
                     MapMat<T> dw, T* db) {
    if (dx != nullptr) {
        dx->noalias() += dy * w;
    }
    dw.noalias() += dy.transpose() * x;
    if (db != nullptr) {
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(db, w.rows()) += dy.colwise().sum();
    }
}

template <typename T>
void ln_forward(const RowMat<T>& x, const T* g, const T* b, RowMat<T>& y, std::vector<T>& mean,
                std::vector<T>& rstd) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    y.resize(n, d);
    mean.resize(static_cast<size_t>(n));
    rstd.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const T mu = x.row(i).mean();
        const T var = (x.row(i).array() - mu).square().mean();
        const T r = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var) + kLnEps));
        mean[static_cast<size_t>(i)] = mu;
        rstd[static_cast<size_t>(i)] = r;
        for (int j = 0; j < d; ++j) {
            y(i, j) = g[j] * (x(i, j) - mu) * r + b[j];
        }
    }
}

template <typename T>
void ln_backward(const RowMat<T>& x, const std::vector<T>& mean, const std::vector<T>& rstd,
                 const T* g, const RowMat<T>& dy, RowMat<T>& dx, T* dg, T* db) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    for (int i = 0; i < n; ++i) {
        const T mu = mean[static_cast<size_t>(i)];
        const T r = rstd[static_cast<size_t>(i)];
        T sum_dxhat = 0;
        T sum_dxhat_xhat = 0;
        for (int j = 0; j < d; ++j) {
            const T xhat = (x(i, j) - mu) * r;
            const T dxhat = dy(i, j) * g[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            dg[j] += dy(i, j) * xhat;
            db[j] += dy(i, j);
        }
        const T inv_d = static_cast<T>(1) / static_cast<T>(d);
        for (int j = 0; j < d; ++j) {
            const T xhat = (x(i, j) - mu) * r;
            const T dxhat = dy(i, j) * g[j];
            dx(i, j) += r * (dxhat - sum_dxhat * inv_d - xhat * sum_dxhat_xhat * inv_d);
        }
    }
}

template <typename T>
T gelu_scalar(T x) {
    constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double a = 0.044715;
    const double xd = static_cast<double>(x);
    return static_cast<T>(0.5 * xd * (1.0 + std::tanh(c * (xd + a * xd * xd * xd))));
}

template <typename T>
T gelu_grad_scalar(T x) {
    constexpr double c = 0.7978845608028654;
    constexpr double a = 0.044715;
    const double xd = static_cast<double>(x);
    const double t = std::tanh(c * (xd + a * xd * xd * xd));
    const double du = c * (1.0 + 3.0 * a * xd * xd);
    return static_cast<T>(0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * du);
}

template <typename T>
void softmax_rows(RowMat<T>& s) {
    for (int i = 0; i < s.rows(); ++i) {
        const T m = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - m).exp();
        const T sum = s.row(i).sum();
        s.row(i) /= sum;
    }
}

// da = (dp - rowsum(dp .* p)) .* p
template <typename T>
void softmax_rows_backward(const RowMat<T>& p, const RowMat<T>& dp, RowMat<T>& da) {
    da.resize(p.rows(), p.cols());
    for (int i = 0; i < p.rows(); ++i) {
        const T dot = p.row(i).cwiseProduct(dp.row(i)).sum();
        da.row(i) = (dp.row(i).array() - dot) * p.row(i).array();
    }
}

template <typename T>
void apply_dropout(RowMat<T>& x, std::vector<T>& mask, float p, bool train, Rng& rng) {
    if (!train || p <= 0.0f) {
        mask.clear();
        return;
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    mask.resize(static_cast<size_t>(x.size()));
    T* xd = x.data();
    for (size_t i = 0; i < mask.size(); ++i) {
        const T m = rng.uniform() < p ? static_cast<T>(0) : keep_scale;
        mask[i] = m;
        xd[i] *= m;
    }
}

template <typename T>
void dropout_backward(RowMat<T>& dy, const std::vector<T>& mask) {
    if (mask.empty()) {
        return;
    }
    T* d = dy.data();
    for (size_t i = 0; i < mask.size(); ++i) {
        d[i] *= mask[i];
    }
}

// Multi-head attention caches for one (query set, key/value set) pair.
template <typename T>
struct AttnCache {
    RowMat<T> q, k, v;             // [nq x d], [nk x d]
    std::vector<RowMat<T>> probs;  // per head [nq x nk]
    RowMat<T> out;                 // concatenated head outputs [nq x d]
};

// probs/out from q,k,v already projected. causal masks keys beyond the
// query index (valid only when nq == nk).
template <typename T>
void attention_forward(AttnCache<T>& c, int n_heads, bool causal) {
    const int nq = static_cast<int>(c.q.rows());
    const int nk = static_cast<int>(c.k.rows());
    const int d = static_cast<int>(c.q.cols());
    const int hd = d / n_heads;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
    c.probs.assign(static_cast<size_t>(n_heads), RowMat<T>());
    c.out.resize(nq, d);
    for (int h = 0; h < n_heads; ++h) {
        auto qh = c.q.middleCols(h * hd, hd);
        auto kh = c.k.middleCols(h * hd, hd);
        auto vh = c.v.middleCols(h * hd, hd);
        RowMat<T>& s = c.probs[static_cast<size_t>(h)];
        s.noalias() = qh * kh.transpose();
        s *= scale;
        if (causal) {
            for (int i = 0; i < nq; ++i) {
                for (int j = i + 1; j < nk; ++j) {
                    s(i, j) = -std::numeric_limits<T>::infinity();
                }
            }
        }
        softmax_rows(s);
        c.out.middleCols(h * hd, hd).noalias() = s * vh;
    }
}

// Backward from d(out) to d(q), d(k), d(v) (accumulated).
template <typename T>
void attention_backward(const AttnCache<T>& c, int n_heads, const RowMat<T>& dout, RowMat<T>& dq,
                        RowMat<T>& dk, RowMat<T>& dv) {
    const int d = static_cast<int>(c.q.cols());
    const int hd = d / n_heads;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
    for (int h = 0; h < n_heads; ++h) {
        auto qh = c.q.middleCols(h * hd, hd);
        auto kh = c.k.middleCols(h * hd, hd);
        auto vh = c.v.middleCols(h * hd, hd);
        const RowMat<T>& p = c.probs[static_cast<size_t>(h)];
        auto douth = dout.middleCols(h * hd, hd);

        RowMat<T> dp;
        dp.noalias() = douth * vh.transpose();
        dv.middleCols(h * hd, hd).noalias() += p.transpose() * douth;

        RowMat<T> da;
        softmax_rows_backward(p, dp, da);
        da *= scale;
        dq.middleCols(h * hd, hd).noalias() += da * kh;
        dk.middleCols(h * hd, hd).noalias() += da.transpose() * qh;
    }
}

}  // namespace

// --------------------------------------------------------------------------
// Config and layout

void ModelConfig::validate() const {
    require(image_height >= 4, "model: image_height too small");
    require(patch_width >= 1, "model: patch_width must be >= 1");
    require(d_model >= 2 && n_heads >= 1, "model: bad d_model/n_heads");
    require(d_model % n_heads == 0, "model: d_model must be divisible by n_heads");
    require(n_encoder_layers >= 1 && n_decoder_layers >= 1, "model: need at least one layer");
    require(ffn_dim >= 1, "model: ffn_dim must be >= 1");
    require(dropout >= 0.0f && dropout < 1.0f, "model: dropout out of [0, 1)");
    require(max_source_patches >= 1 && max_target_len >= 2, "model: bad sequence limits");
    require(vocab_size >= 5, "model: vocab_size must include specials plus content");
}

nlohmann::json ModelConfig::to_json() const {
    return nlohmann::json{{"image_height", image_height},
                          {"patch_width", patch_width},
                          {"d_model", d_model},
                          {"n_heads", n_heads},
                          {"n_encoder_layers", n_encoder_layers},
                          {"n_decoder_layers", n_decoder_layers},
                          {"ffn_dim", ffn_dim},
                          {"dropout", dropout},
                          {"max_source_patches", max_source_patches},
                          {"max_target_len", max_target_len},
                          {"vocab_size", vocab_size},
                          {"tie_output_embedding", tie_output_embedding}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.image_height = j.at("image_height").get<int>();
    c.patch_width = j.at("patch_width").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.n_encoder_layers = j.at("n_encoder_layers").get<int>();
    c.n_decoder_layers = j.at("n_decoder_layers").get<int>();
    c.ffn_dim = j.at("ffn_dim").get<int>();
    c.dropout = j.at("dropout").get<float>();
    c.max_source_patches = j.at("max_source_patches").get<int>();
    c.max_target_len = j.at("max_target_len").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.tie_output_embedding = j.at("tie_output_embedding").get<bool>();
    return c;
}

ParamLayout ParamLayout::build(const ModelConfig& config) {
    config.validate();
    ParamLayout layout;
    auto add = [&](const std::string& name, std::vector<int> shape) {
        TensorSpec spec;
        spec.name = name;
        spec.shape = std::move(shape);
        spec.size = 1;
        for (int dim : spec.shape) {
            spec.size *= static_cast<size_t>(dim);
        }
        spec.offset = layout.total;
        layout.total += spec.size;
        layout.specs.push_back(std::move(spec));
    };

    const int d = config.d_model;
    const int f = config.ffn_dim;
    const int v = config.vocab_size;

    add("patch_proj.w", {d, config.patch_dim()});
    add("patch_proj.b", {d});
    add("src_pos", {config.max_source_patches, d});
    add("tok_emb", {v, d});
    add("tgt_pos", {config.max_target_len, d});

    auto add_attn = [&](const std::string& prefix) {
        add(prefix + ".wq", {d, d});
        add(prefix + ".bq", {d});
        add(prefix + ".wk", {d, d});
        add(prefix + ".bk", {d});
        add(prefix + ".wv", {d, d});
        add(prefix + ".bv", {d});
        add(prefix + ".wo", {d, d});
        add(prefix + ".bo", {d});
    };
    auto add_ffn = [&](const std::string& prefix) {
        add(prefix + ".w1", {f, d});
        add(prefix + ".b1", {f});
        add(prefix + ".w2", {d, f});
        add(prefix + ".b2", {d});
    };

    for (int i = 0; i < config.n_encoder_layers; ++i) {
        const std::string p = "enc." + std::to_string(i);
        add(p + ".ln1.g", {d});
        add(p + ".ln1.b", {d});
        add_attn(p + ".attn");
        add(p + ".ln2.g", {d});
        add(p + ".ln2.b", {d});
        add_ffn(p + ".ffn");
    }
    for (int i = 0; i < config.n_decoder_layers; ++i) {
        const std::string p = "dec." + std::to_string(i);
        add(p + ".ln1.g", {d});
        add(p + ".ln1.b", {d});
        add_attn(p + ".self");
        add(p + ".ln2.g", {d});
        add(p + ".ln2.b", {d});
        add_attn(p + ".cross");
        add(p + ".ln3.g", {d});
        add(p + ".ln3.b", {d});
        add_ffn(p + ".ffn");
    }
    add("enc_ln.g", {d});
    add("enc_ln.b", {d});
    add("dec_ln.g", {d});
    add("dec_ln.b", {d});
    if (!config.tie_output_embedding) {
        add("out_proj.w", {v, d});
    }
    add("out_proj.b", {v});
    return layout;
}

const TensorSpec& ParamLayout::spec(const std::string& name) const {
    for (const auto& s : specs) {
        if (s.name == name) {
            return s;
        }
    }
    throw InvalidArgument("model: unknown parameter group '" + name + "'");
}

bool ParamLayout::has(const std::string& name) const {
    for (const auto& s : specs) {
        if (s.name == name) {
            return true;
        }
    }
    return false;
}

const std::string& ParamLayout::group_of(size_t flat_index) const {
    for (const auto& s : specs) {
        if (flat_index >= s.offset && flat_index < s.offset + s.size) {
            return s.name;
        }
    }
    throw InvalidArgument("model: flat index out of range");
}

std::vector<float> extract_attention(const AttentionRecord& record, int layer,
                                     AttentionReduce reduce, int head) {
    require(layer >= 0 && layer < record.n_layers, "extract_attention: bad layer index");
    if (reduce == AttentionReduce::kSingleHead) {
        require(head >= 0 && head < record.n_heads, "extract_attention: bad head index");
    }
    std::vector<float> out(static_cast<size_t>(record.n_tokens) * record.n_patches, 0.0f);
    for (int t = 0; t < record.n_tokens; ++t) {
        for (int p = 0; p < record.n_patches; ++p) {
            float v = 0.0f;
            if (reduce == AttentionReduce::kSingleHead) {
                v = record.at(layer, head, t, p);
            } else {
                for (int h = 0; h < record.n_heads; ++h) {
                    v += record.at(layer, h, t, p);
                }
                v /= static_cast<float>(record.n_heads);
            }
            out[static_cast<size_t>(t) * record.n_patches + p] = v;
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// Net

namespace {

// Per-layer caches used by backward.
template <typename T>
struct BlockCache {
    RowMat<T> x_in;  // layer input
    RowMat<T> xn1;   // ln1 output
    std::vector<T> m1, r1;
    AttnCache<T> self_attn;
    std::vector<T> drop1;
    RowMat<T> x_mid;  // after first residual
    // decoder only: cross attention
    RowMat<T> xn2;
    std::vector<T> m2, r2;
    AttnCache<T> cross_attn;
    std::vector<T> drop2;
    RowMat<T> x_mid2;
    // ffn
    RowMat<T> xn3;
    std::vector<T> m3, r3;
    RowMat<T> u;     // pre-activation
    RowMat<T> gelu;  // activation output
    std::vector<T> drop3;
};

template <typename T>
struct Workspace {
    RowMat<T> patches;  // [P x patch_dim]
    RowMat<T> x0;       // encoder input embeddings
    std::vector<BlockCache<T>> enc;
    RowMat<T> enc_out;  // before final encoder LN
    std::vector<T> enc_ln_m, enc_ln_r;
    RowMat<T> memory;  // final encoder output

    RowMat<T> y0;  // decoder input embeddings
    std::vector<BlockCache<T>> dec;
    RowMat<T> dec_out;
    std::vector<T> dec_ln_m, dec_ln_r;
    RowMat<T> hidden;  // final decoder output
    RowMat<T> logits;  // [T-1 x V]
};

}  // namespace

template <typename T>
class Engine {
  public:
    Engine(const ModelConfig& config, const ParamLayout& layout, const std::vector<T>& params)
        : cfg_(config), layout_(layout), p_(params) {}

    CMapMat<T> mat(const std::string& name) const {
        const TensorSpec& s = layout_.spec(name);
        return CMapMat<T>(p_.data() + s.offset, s.shape[0],
                          s.shape.size() > 1 ? s.shape[1] : 1);
    }
    const T* vec(const std::string& name) const {
        return p_.data() + layout_.spec(name).offset;
    }
    CMapMat<T> out_proj_w() const {
        return cfg_.tie_output_embedding ? mat("tok_emb") : mat("out_proj.w");
    }

    void build_patches(const float* image, int width, int stride, RowMat<T>& patches) const {
        const int pw = cfg_.patch_width;
        const int h = cfg_.image_height;
        const int n_patches = (width + pw - 1) / pw;
        require(n_patches <= cfg_.max_source_patches,
                "model: image width " + std::to_string(width) + " needs " +
                    std::to_string(n_patches) + " patches, max is " +
                    std::to_string(cfg_.max_source_patches) + " (" +
                    std::to_string(cfg_.max_image_width()) + " px)");
        require(width >= 1, "model: empty image");
        patches.resize(n_patches, cfg_.patch_dim());
        // Patches carry ink intensity (1 - pixel): background is exactly
        // zero, so patch vectors are sparse and discriminative.
        for (int p = 0; p < n_patches; ++p) {
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < pw; ++c) {
                    const int col = p * pw + c;
                    patches(p, r * pw + c) =
                        col < width
                            ? static_cast<T>(1) -
                                  static_cast<T>(image[static_cast<size_t>(r) * stride + col])
                            : static_cast<T>(0);
                }
            }
        }
    }

    // Shared transformer block. If `memory` is non-null the block includes
    // cross attention (decoder); self attention is causal in that case.
    void block_forward(const std::string& prefix, BlockCache<T>& c, RowMat<T>& x,
                       const RowMat<T>* memory, bool train, Rng& rng) const {
        const bool is_dec = memory != nullptr;
        c.x_in = x;
        ln_forward(x, vec(prefix + ".ln1.g"), vec(prefix + ".ln1.b"), c.xn1, c.m1, c.r1);
        const std::string attn = is_dec ? prefix + ".self" : prefix + ".attn";
        linear_forward(c.xn1, mat(attn + ".wq"), vec(attn + ".bq"), c.self_attn.q);
        linear_forward(c.xn1, mat(attn + ".wk"), vec(attn + ".bk"), c.self_attn.k);
        linear_forward(c.xn1, mat(attn + ".wv"), vec(attn + ".bv"), c.self_attn.v);
        attention_forward(c.self_attn, cfg_.n_heads, /*causal=*/is_dec);
        RowMat<T> proj;
        linear_forward(c.self_attn.out, mat(attn + ".wo"), vec(attn + ".bo"), proj);
        apply_dropout(proj, c.drop1, cfg_.dropout, train, rng);
        x += proj;
        c.x_mid = x;

        if (is_dec) {
            ln_forward(x, vec(prefix + ".ln2.g"), vec(prefix + ".ln2.b"), c.xn2, c.m2, c.r2);
            linear_forward(c.xn2, mat(prefix + ".cross.wq"), vec(prefix + ".cross.bq"),
                           c.cross_attn.q);
            linear_forward(*memory, mat(prefix + ".cross.wk"), vec(prefix + ".cross.bk"),
                           c.cross_attn.k);
            linear_forward(*memory, mat(prefix + ".cross.wv"), vec(prefix + ".cross.bv"),
                           c.cross_attn.v);
            attention_forward(c.cross_attn, cfg_.n_heads, /*causal=*/false);
            RowMat<T> proj2;
            linear_forward(c.cross_attn.out, mat(prefix + ".cross.wo"), vec(prefix + ".cross.bo"),
                           proj2);
            apply_dropout(proj2, c.drop2, cfg_.dropout, train, rng);
            x += proj2;
            c.x_mid2 = x;
        }

        const std::string ln_ffn = is_dec ? prefix + ".ln3" : prefix + ".ln2";
        ln_forward(x, vec(ln_ffn + ".g"), vec(ln_ffn + ".b"), c.xn3, c.m3, c.r3);
        linear_forward(c.xn3, mat(prefix + ".ffn.w1"), vec(prefix + ".ffn.b1"), c.u);
        c.gelu = c.u.unaryExpr([](T v) { return gelu_scalar(v); });
        RowMat<T> f;
        linear_forward(c.gelu, mat(prefix + ".ffn.w2"), vec(prefix + ".ffn.b2"), f);
        apply_dropout(f, c.drop3, cfg_.dropout, train, rng);
        x += f;
    }

    // Backward of block_forward. dx is d(loss)/d(layer output) on entry and
    // d(loss)/d(layer input) on exit. dmemory accumulates for decoder blocks.
    void block_backward(const std::string& prefix, const BlockCache<T>& c, RowMat<T>& dx,
                        const RowMat<T>* memory, RowMat<T>* dmemory, std::vector<T>& grad) const {
        const bool is_dec = memory != nullptr;
        auto gvec = [&](const std::string& name) { return grad.data() + layout_.spec(name).offset; };
        auto gmat = [&](const std::string& name) {
            const TensorSpec& s = layout_.spec(name);
            return MapMat<T>(grad.data() + s.offset, s.shape[0],
                             s.shape.size() > 1 ? s.shape[1] : 1);
        };

        // FFN branch.
        RowMat<T> df = dx;  // gradient into the ffn output (residual add)
        dropout_backward(df, c.drop3);
        RowMat<T> dgelu(df.rows(), cfg_.ffn_dim);
        dgelu.setZero();
        linear_backward(c.gelu, mat(prefix + ".ffn.w2"), df, &dgelu, gmat(prefix + ".ffn.w2"),
                        gvec(prefix + ".ffn.b2"));
        RowMat<T> du = dgelu;
        for (int i = 0; i < du.rows(); ++i) {
            for (int j = 0; j < du.cols(); ++j) {
                du(i, j) *= gelu_grad_scalar(c.u(i, j));
            }
        }
        RowMat<T> dxn3(df.rows(), cfg_.d_model);
        dxn3.setZero();
        linear_backward(c.xn3, mat(prefix + ".ffn.w1"), du, &dxn3, gmat(prefix + ".ffn.w1"),
                        gvec(prefix + ".ffn.b1"));
        const std::string ln_ffn = is_dec ? prefix + ".ln3" : prefix + ".ln2";
        const RowMat<T>& ffn_input = is_dec ? c.x_mid2 : c.x_mid;
        ln_backward(ffn_input, c.m3, c.r3, vec(ln_ffn + ".g"), dxn3, dx, gvec(ln_ffn + ".g"),
                    gvec(ln_ffn + ".b"));

        // Cross-attention branch (decoder only).
        if (is_dec) {
            RowMat<T> dproj2 = dx;
            dropout_backward(dproj2, c.drop2);
            RowMat<T> dcross_out(dproj2.rows(), cfg_.d_model);
            dcross_out.setZero();
            linear_backward(c.cross_attn.out, mat(prefix + ".cross.wo"), dproj2, &dcross_out,
                            gmat(prefix + ".cross.wo"), gvec(prefix + ".cross.bo"));
            RowMat<T> dq2 = RowMat<T>::Zero(c.cross_attn.q.rows(), cfg_.d_model);
            RowMat<T> dk2 = RowMat<T>::Zero(c.cross_attn.k.rows(), cfg_.d_model);
            RowMat<T> dv2 = RowMat<T>::Zero(c.cross_attn.v.rows(), cfg_.d_model);
            attention_backward(c.cross_attn, cfg_.n_heads, dcross_out, dq2, dk2, dv2);
            RowMat<T> dxn2(dproj2.rows(), cfg_.d_model);
            dxn2.setZero();
            linear_backward(c.xn2, mat(prefix + ".cross.wq"), dq2, &dxn2,
                            gmat(prefix + ".cross.wq"), gvec(prefix + ".cross.bq"));
            linear_backward(*memory, mat(prefix + ".cross.wk"), dk2, dmemory,
                            gmat(prefix + ".cross.wk"), gvec(prefix + ".cross.bk"));
            linear_backward(*memory, mat(prefix + ".cross.wv"), dv2, dmemory,
                            gmat(prefix + ".cross.wv"), gvec(prefix + ".cross.bv"));
            ln_backward(c.x_mid, c.m2, c.r2, vec(prefix + ".ln2.g"), dxn2, dx,
                        gvec(prefix + ".ln2.g"), gvec(prefix + ".ln2.b"));
        }

        // Self-attention branch.
        const std::string attn = is_dec ? prefix + ".self" : prefix + ".attn";
        RowMat<T> dproj = dx;
        dropout_backward(dproj, c.drop1);
        RowMat<T> dattn_out(dproj.rows(), cfg_.d_model);
        dattn_out.setZero();
        linear_backward(c.self_attn.out, mat(attn + ".wo"), dproj, &dattn_out, gmat(attn + ".wo"),
                        gvec(attn + ".bo"));
        RowMat<T> dq = RowMat<T>::Zero(c.self_attn.q.rows(), cfg_.d_model);
        RowMat<T> dk = RowMat<T>::Zero(c.self_attn.k.rows(), cfg_.d_model);
        RowMat<T> dv = RowMat<T>::Zero(c.self_attn.v.rows(), cfg_.d_model);
        attention_backward(c.self_attn, cfg_.n_heads, dattn_out, dq, dk, dv);
        RowMat<T> dxn1(dproj.rows(), cfg_.d_model);
        dxn1.setZero();
        linear_backward(c.xn1, mat(attn + ".wq"), dq, &dxn1, gmat(attn + ".wq"), gvec(attn + ".bq"));
        linear_backward(c.xn1, mat(attn + ".wk"), dk, &dxn1, gmat(attn + ".wk"), gvec(attn + ".bk"));
        linear_backward(c.xn1, mat(attn + ".wv"), dv, &dxn1, gmat(attn + ".wv"), gvec(attn + ".bv"));
        ln_backward(c.x_in, c.m1, c.r1, vec(prefix + ".ln1.g"), dxn1, dx, gvec(prefix + ".ln1.g"),
                    gvec(prefix + ".ln1.b"));
    }

    void encoder_forward(Workspace<T>& ws, const float* image, int width, int stride, bool train,
                         Rng& rng) const {
        build_patches(image, width, stride, ws.patches);
        const int n_patches = static_cast<int>(ws.patches.rows());
        linear_forward(ws.patches, mat("patch_proj.w"), vec("patch_proj.b"), ws.x0);
        ws.x0 += mat("src_pos").topRows(n_patches);
        RowMat<T> x = ws.x0;
        ws.enc.resize(static_cast<size_t>(cfg_.n_encoder_layers));
        for (int l = 0; l < cfg_.n_encoder_layers; ++l) {
            block_forward("enc." + std::to_string(l), ws.enc[static_cast<size_t>(l)], x, nullptr,
                          train, rng);
        }
        ws.enc_out = x;
        ln_forward(x, vec("enc_ln.g"), vec("enc_ln.b"), ws.memory, ws.enc_ln_m, ws.enc_ln_r);
    }

    void decoder_forward(Workspace<T>& ws, const int* target, int target_len, bool train,
                         Rng& rng) const {
        require(target_len >= 2 && target_len <= cfg_.max_target_len,
                "model: target length out of range");
        const auto tok = mat("tok_emb");
        const auto pos = mat("tgt_pos");
        ws.y0.resize(target_len, cfg_.d_model);
        for (int t = 0; t < target_len; ++t) {
            const int id = target[t];
            require(id >= 0 && id < cfg_.vocab_size, "model: token id out of range");
            ws.y0.row(t) = tok.row(id) + pos.row(t);
        }
        RowMat<T> y = ws.y0;
        ws.dec.resize(static_cast<size_t>(cfg_.n_decoder_layers));
        for (int l = 0; l < cfg_.n_decoder_layers; ++l) {
            block_forward("dec." + std::to_string(l), ws.dec[static_cast<size_t>(l)], y,
                          &ws.memory, train, rng);
        }
        ws.dec_out = y;
        ln_forward(y, vec("dec_ln.g"), vec("dec_ln.b"), ws.hidden, ws.dec_ln_m, ws.dec_ln_r);
        RowMat<T> head_in = ws.hidden.topRows(target_len - 1);
        linear_forward(head_in, out_proj_w(), vec("out_proj.b"), ws.logits);
    }

    const ModelConfig& cfg_;
    const ParamLayout& layout_;
    const std::vector<T>& p_;
};

template <typename T>
Net<T>::Net(const ModelConfig& config)
    : config_(config), layout_(ParamLayout::build(config)), params_(layout_.total, T(0)) {}

template <typename T>
void Net<T>::init(uint64_t seed) {
    Rng rng(derive_seed(seed, 0x696e6974ull));
    for (const auto& spec : layout_.specs) {
        const std::string last = spec.name.substr(spec.name.find_last_of('.') + 1);
        T* dst = params_.data() + spec.offset;
        if (last[0] == 'g') {
            std::fill_n(dst, spec.size, T(1));
        } else if (last[0] == 'b') {
            std::fill_n(dst, spec.size, T(0));
        } else {
            for (size_t i = 0; i < spec.size; ++i) {
                dst[i] = static_cast<T>(rng.truncated_normal(0.02));
            }
        }
    }
}

template <typename T>
int Net<T>::patch_count(int width) const {
    require(width >= 1, "model: empty image");
    return (width + config_.patch_width - 1) / config_.patch_width;
}

template <typename T>
std::vector<T> Net<T>::encode_image(const float* image, int width, int stride) const {
    Engine<T> eng(config_, layout_, params_);
    Workspace<T> ws;
    Rng rng(0);
    eng.encoder_forward(ws, image, width, stride, /*train=*/false, rng);
    std::vector<T> out(static_cast<size_t>(ws.memory.rows()) * config_.d_model);
    MapMat<T>(out.data(), ws.memory.rows(), config_.d_model) = ws.memory;
    return out;
}

namespace {

template <typename T>
AttentionRecord record_from_workspace(const Workspace<T>& ws, const ModelConfig& cfg) {
    AttentionRecord rec;
    rec.n_layers = cfg.n_decoder_layers;
    rec.n_heads = cfg.n_heads;
    rec.n_tokens = static_cast<int>(ws.dec.empty() ? 0 : ws.dec[0].cross_attn.q.rows());
    rec.n_patches = static_cast<int>(ws.memory.rows());
    rec.data.resize(static_cast<size_t>(rec.n_layers) * rec.n_heads * rec.n_tokens *
                    rec.n_patches);
    for (int l = 0; l < rec.n_layers; ++l) {
        for (int h = 0; h < rec.n_heads; ++h) {
            const RowMat<T>& p = ws.dec[static_cast<size_t>(l)].cross_attn.probs[static_cast<size_t>(h)];
            for (int t = 0; t < rec.n_tokens; ++t) {
                for (int s = 0; s < rec.n_patches; ++s) {
                    rec.data[((static_cast<size_t>(l) * rec.n_heads + h) * rec.n_tokens + t) *
                                 rec.n_patches +
                             s] = static_cast<float>(p(t, s));
                }
            }
        }
    }
    return rec;
}

}  // namespace

template <typename T>
typename Net<T>::SampleStats Net<T>::loss_and_grad(const float* image, int width, int stride,
                                                   const int* target, int target_len,
                                                   bool train_mode, uint64_t dropout_seed,
                                                   std::vector<T>& grad) const {
    require(grad.size() == layout_.total, "model: gradient buffer size mismatch");
    Engine<T> eng(config_, layout_, params_);
    Workspace<T> ws;
    Rng rng(dropout_seed);
    eng.encoder_forward(ws, image, width, stride, train_mode, rng);
    eng.decoder_forward(ws, target, target_len, train_mode, rng);

    const int n_pos = target_len - 1;
    const int v = config_.vocab_size;

    // Softmax cross-entropy over non-PAD next tokens.
    SampleStats stats;
    RowMat<T> dlogits = RowMat<T>::Zero(n_pos, v);
    for (int t = 0; t < n_pos; ++t) {
        const int gold = target[t + 1];
        if (gold == Tokenizer::kPad) {
            continue;
        }
        const T row_max = ws.logits.row(t).maxCoeff();
        double sum_exp = 0.0;
        for (int j = 0; j < v; ++j) {
            sum_exp += std::exp(static_cast<double>(ws.logits(t, j) - row_max));
        }
        const double lse = std::log(sum_exp) + static_cast<double>(row_max);
        stats.loss_sum += lse - static_cast<double>(ws.logits(t, gold));
        stats.n_positions += 1;
        for (int j = 0; j < v; ++j) {
            dlogits(t, j) =
                static_cast<T>(std::exp(static_cast<double>(ws.logits(t, j)) - lse));
        }
        dlogits(t, gold) -= T(1);
    }
    if (stats.n_positions == 0) {
        return stats;
    }

    auto gmap = [&](const std::string& name) {
        const TensorSpec& s = layout_.spec(name);
        return MapMat<T>(grad.data() + s.offset, s.shape[0], s.shape.size() > 1 ? s.shape[1] : 1);
    };
    auto gptr = [&](const std::string& name) { return grad.data() + layout_.spec(name).offset; };

    // Output head backward.
    RowMat<T> dhidden = RowMat<T>::Zero(target_len, config_.d_model);
    {
        RowMat<T> head_in = ws.hidden.topRows(n_pos);
        RowMat<T> dhead = RowMat<T>::Zero(n_pos, config_.d_model);
        const std::string w_name = config_.tie_output_embedding ? "tok_emb" : "out_proj.w";
        linear_backward(head_in, eng.mat(w_name), dlogits, &dhead, gmap(w_name),
                        gptr("out_proj.b"));
        dhidden.topRows(n_pos) = dhead;
    }

    // Final decoder LN.
    RowMat<T> dy = RowMat<T>::Zero(target_len, config_.d_model);
    ln_backward(ws.dec_out, ws.dec_ln_m, ws.dec_ln_r, eng.vec("dec_ln.g"), dhidden, dy,
                gptr("dec_ln.g"), gptr("dec_ln.b"));

    // Decoder stack.
    RowMat<T> dmemory = RowMat<T>::Zero(ws.memory.rows(), config_.d_model);
    for (int l = config_.n_decoder_layers - 1; l >= 0; --l) {
        eng.block_backward("dec." + std::to_string(l), ws.dec[static_cast<size_t>(l)], dy,
                           &ws.memory, &dmemory, grad);
    }

    // Decoder embeddings.
    {
        MapMat<T> dtok = gmap("tok_emb");
        MapMat<T> dpos = gmap("tgt_pos");
        for (int t = 0; t < target_len; ++t) {
            dtok.row(target[t]) += dy.row(t);
            dpos.row(t) += dy.row(t);
        }
    }

    // Final encoder LN, then encoder stack.
    RowMat<T> dx = RowMat<T>::Zero(ws.memory.rows(), config_.d_model);
    ln_backward(ws.enc_out, ws.enc_ln_m, ws.enc_ln_r, eng.vec("enc_ln.g"), dmemory, dx,
                gptr("enc_ln.g"), gptr("enc_ln.b"));
    for (int l = config_.n_encoder_layers - 1; l >= 0; --l) {
        eng.block_backward("enc." + std::to_string(l), ws.enc[static_cast<size_t>(l)], dx, nullptr,
                           nullptr, grad);
    }

    // Patch projection and source positions.
    {
        MapMat<T> dsrc = gmap("src_pos");
        dsrc.topRows(dx.rows()) += dx;
        linear_backward(ws.patches, eng.mat("patch_proj.w"), dx, static_cast<RowMat<T>*>(nullptr),
                        gmap("patch_proj.w"), gptr("patch_proj.b"));
    }
    return stats;
}

template <typename T>
std::vector<T> Net<T>::forward_logits(const float* image, int width, int stride,
                                      const int* target, int target_len,
                                      AttentionRecord* record) const {
    Engine<T> eng(config_, layout_, params_);
    Workspace<T> ws;
    Rng rng(0);
    eng.encoder_forward(ws, image, width, stride, /*train=*/false, rng);
    eng.decoder_forward(ws, target, target_len, /*train=*/false, rng);
    if (record != nullptr) {
        *record = record_from_workspace(ws, config_);
    }
    std::vector<T> out(static_cast<size_t>(target_len - 1) * config_.vocab_size);
    MapMat<T>(out.data(), target_len - 1, config_.vocab_size) = ws.logits;
    return out;
}

template <typename T>
GreedyResult Net<T>::greedy_decode(const float* image, int width, int stride,
                                   const Tokenizer& tokenizer, int max_len,
                                   bool want_attention) const {
    Engine<T> eng(config_, layout_, params_);
    Workspace<T> ws;
    Rng rng(0);
    eng.encoder_forward(ws, image, width, stride, /*train=*/false, rng);
    const RowMat<T>& memory = ws.memory;
    const int n_patches = static_cast<int>(memory.rows());
    const int d = config_.d_model;
    const int n_layers = config_.n_decoder_layers;
    max_len = std::min(max_len, config_.max_target_len - 1);
    require(max_len >= 1, "model: max_len must allow at least one token");

    // Cross K/V are fixed per layer; self K/V grow one row per step.
    std::vector<RowMat<T>> cross_k(static_cast<size_t>(n_layers));
    std::vector<RowMat<T>> cross_v(static_cast<size_t>(n_layers));
    std::vector<RowMat<T>> self_k(static_cast<size_t>(n_layers));
    std::vector<RowMat<T>> self_v(static_cast<size_t>(n_layers));
    for (int l = 0; l < n_layers; ++l) {
        const std::string p = "dec." + std::to_string(l);
        linear_forward(memory, eng.mat(p + ".cross.wk"), eng.vec(p + ".cross.bk"),
                       cross_k[static_cast<size_t>(l)]);
        linear_forward(memory, eng.mat(p + ".cross.wv"), eng.vec(p + ".cross.bv"),
                       cross_v[static_cast<size_t>(l)]);
        self_k[static_cast<size_t>(l)].resize(max_len + 1, d);
        self_v[static_cast<size_t>(l)].resize(max_len + 1, d);
    }

    const auto tok = eng.mat("tok_emb");
    const auto pos = eng.mat("tgt_pos");
    const int n_heads = config_.n_heads;
    const int hd = config_.head_dim();
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));

    GreedyResult result;
    std::vector<float> attn_steps;  // [step][layer][head][patch]
    RowMat<T> x(1, d);
    x.row(0) = tok.row(Tokenizer::kBos) + pos.row(0);

    for (int step = 0; step < max_len; ++step) {
        RowMat<T> cur = x;
        for (int l = 0; l < n_layers; ++l) {
            const std::string p = "dec." + std::to_string(l);
            RowMat<T> xn;
            std::vector<T> m, r;
            ln_forward(cur, eng.vec(p + ".ln1.g"), eng.vec(p + ".ln1.b"), xn, m, r);
            RowMat<T> q, k, v;
            linear_forward(xn, eng.mat(p + ".self.wq"), eng.vec(p + ".self.bq"), q);
            linear_forward(xn, eng.mat(p + ".self.wk"), eng.vec(p + ".self.bk"), k);
            linear_forward(xn, eng.mat(p + ".self.wv"), eng.vec(p + ".self.bv"), v);
            self_k[static_cast<size_t>(l)].row(step) = k.row(0);
            self_v[static_cast<size_t>(l)].row(step) = v.row(0);
            RowMat<T> attn_out(1, d);
            for (int h = 0; h < n_heads; ++h) {
                auto kh = self_k[static_cast<size_t>(l)].topRows(step + 1).middleCols(h * hd, hd);
                auto vh = self_v[static_cast<size_t>(l)].topRows(step + 1).middleCols(h * hd, hd);
                RowMat<T> s(1, step + 1);
                s.noalias() = q.middleCols(h * hd, hd) * kh.transpose();
                s *= scale;
                softmax_rows(s);
                attn_out.middleCols(h * hd, hd).noalias() = s * vh;
            }
            RowMat<T> proj;
            linear_forward(attn_out, eng.mat(p + ".self.wo"), eng.vec(p + ".self.bo"), proj);
            cur += proj;

            RowMat<T> xn2;
            ln_forward(cur, eng.vec(p + ".ln2.g"), eng.vec(p + ".ln2.b"), xn2, m, r);
            RowMat<T> q2;
            linear_forward(xn2, eng.mat(p + ".cross.wq"), eng.vec(p + ".cross.bq"), q2);
            RowMat<T> cross_out(1, d);
            for (int h = 0; h < n_heads; ++h) {
                auto kh = cross_k[static_cast<size_t>(l)].middleCols(h * hd, hd);
                auto vh = cross_v[static_cast<size_t>(l)].middleCols(h * hd, hd);
                RowMat<T> s(1, n_patches);
                s.noalias() = q2.middleCols(h * hd, hd) * kh.transpose();
                s *= scale;
                softmax_rows(s);
                if (want_attention) {
                    for (int sp = 0; sp < n_patches; ++sp) {
                        attn_steps.push_back(static_cast<float>(s(0, sp)));
                    }
                }
                cross_out.middleCols(h * hd, hd).noalias() = s * vh;
            }
            RowMat<T> proj2;
            linear_forward(cross_out, eng.mat(p + ".cross.wo"), eng.vec(p + ".cross.bo"), proj2);
            cur += proj2;

            RowMat<T> xn3;
            ln_forward(cur, eng.vec(p + ".ln3.g"), eng.vec(p + ".ln3.b"), xn3, m, r);
            RowMat<T> u;
            linear_forward(xn3, eng.mat(p + ".ffn.w1"), eng.vec(p + ".ffn.b1"), u);
            RowMat<T> gl = u.unaryExpr([](T vv) { return gelu_scalar(vv); });
            RowMat<T> f;
            linear_forward(gl, eng.mat(p + ".ffn.w2"), eng.vec(p + ".ffn.b2"), f);
            cur += f;
        }
        RowMat<T> hidden;
        std::vector<T> m, r;
        ln_forward(cur, eng.vec("dec_ln.g"), eng.vec("dec_ln.b"), hidden, m, r);
        RowMat<T> logits;
        linear_forward(hidden, eng.out_proj_w(), eng.vec("out_proj.b"), logits);

        int best = 0;
        T best_val = logits(0, 0);
        for (int j = 1; j < config_.vocab_size; ++j) {
            if (logits(0, j) > best_val) {  // strict: ties keep the lowest id
                best_val = logits(0, j);
                best = j;
            }
        }
        result.token_ids.push_back(best);
        if (best == Tokenizer::kEos) {
            break;
        }
        x.row(0) = tok.row(best) + pos.row(step + 1);
    }

    result.text = tokenizer.decode(result.token_ids);
    if (want_attention) {
        const int n_tokens = static_cast<int>(result.token_ids.size());
        AttentionRecord rec;
        rec.n_layers = n_layers;
        rec.n_heads = n_heads;
        rec.n_tokens = n_tokens;
        rec.n_patches = n_patches;
        rec.data.resize(static_cast<size_t>(n_layers) * n_heads * n_tokens * n_patches);
        // attn_steps is [step][layer][head][patch]; reorder to record layout.
        for (int t = 0; t < n_tokens; ++t) {
            for (int l = 0; l < n_layers; ++l) {
                for (int h = 0; h < n_heads; ++h) {
                    for (int sp = 0; sp < n_patches; ++sp) {
                        const size_t src =
                            ((static_cast<size_t>(t) * n_layers + l) * n_heads + h) * n_patches +
                            sp;
                        rec.data[((static_cast<size_t>(l) * n_heads + h) * n_tokens + t) *
                                     n_patches +
                                 sp] = attn_steps[src];
                    }
                }
            }
        }
        result.attention = std::move(rec);
    }
    return result;
}

template class Net<float>;
template class Net<double>;

// --------------------------------------------------------------------------
// Batch wrappers

TeacherForcedOutput forward_teacher_forced(const NetF& net, const Batch& batch, bool train_mode,
                                           uint64_t dropout_seed, bool want_attention,
                                           int threads) {
    require(!train_mode || net.config().dropout == 0.0f || dropout_seed != 0,
            "model: train-mode forward needs a dropout seed");
    TeacherForcedOutput out;
    out.n_positions = batch.max_target_len - 1;
    out.vocab = net.config().vocab_size;
    out.logits.assign(
        static_cast<size_t>(batch.size) * out.n_positions * out.vocab, 0.0f);
    out.records.resize(want_attention ? static_cast<size_t>(batch.size) : 0);
    parallel_for(
        batch.size,
        [&](int64_t s) {
            const int len = batch.target_lens[static_cast<size_t>(s)];
            AttentionRecord rec;
            // Train-mode forward uses the fused path; this wrapper is the
            // eval-mode contract surface.
            const std::vector<float> logits = net.forward_logits(
                batch.image_of(static_cast<int>(s)), batch.widths[static_cast<size_t>(s)],
                batch.max_width, batch.target_of(static_cast<int>(s)), len,
                want_attention ? &rec : nullptr);
            float* dst = out.logits.data() +
                         static_cast<size_t>(s) * out.n_positions * out.vocab;
            std::copy(logits.begin(), logits.end(), dst);
            if (want_attention) {
                out.records[static_cast<size_t>(s)] = std::move(rec);
            }
        },
        threads > 0 ? threads : default_thread_count());
    return out;
}

double sequence_loss(const std::vector<float>& logits, int batch, int n_positions, int vocab,
                     const std::vector<int>& targets, int max_target_len) {
    require(logits.size() == static_cast<size_t>(batch) * n_positions * vocab,
            "loss: logits shape mismatch");
    require(targets.size() == static_cast<size_t>(batch) * max_target_len,
            "loss: targets shape mismatch");
    require(n_positions <= max_target_len - 1, "loss: position count exceeds targets");
    double total = 0.0;
    int64_t count = 0;
    for (int s = 0; s < batch; ++s) {
        const int* tgt = targets.data() + static_cast<size_t>(s) * max_target_len;
        const float* lg = logits.data() + static_cast<size_t>(s) * n_positions * vocab;
        for (int t = 0; t < n_positions; ++t) {
            const int gold = tgt[t + 1];
            if (gold == Tokenizer::kPad) {
                continue;
            }
            require(gold >= 0 && gold < vocab, "loss: gold token out of range");
            const float* row = lg + static_cast<size_t>(t) * vocab;
            float row_max = row[0];
            for (int j = 1; j < vocab; ++j) {
                row_max = std::max(row_max, row[j]);
            }
            double sum_exp = 0.0;
            for (int j = 0; j < vocab; ++j) {
                sum_exp += std::exp(static_cast<double>(row[j] - row_max));
            }
            total += std::log(sum_exp) + static_cast<double>(row_max) -
                     static_cast<double>(row[gold]);
            ++count;
        }
    }
    require(count > 0, "loss: no non-PAD target positions");
    return total / static_cast<double>(count);
}

}  // namespace cipherpix
