#include "synthstab/nn.hpp"

#include "synthstab/errors.hpp"
#include "synthstab/rng.hpp"
#include "synthstab/textio.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace synthstab {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

// Input [c, h, w] -> columns [c*9, ho*wo] for a 3x3 stride-2 pad-1 kernel.
void im2col(const double* in, int c, int h, int w, int ho, int wo, double* col) {
    const int n = ho * wo;
    for (int ch = 0; ch < c; ++ch) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                double* row = col + static_cast<std::size_t>((ch * 3 + ky) * 3 + kx) * n;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * 2 - 1 + ky;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * 2 - 1 + kx;
                        row[oy * wo + ox] = (iy < 0 || iy >= h || ix < 0 || ix >= w)
                                                ? 0.0
                                                : in[(static_cast<std::size_t>(ch) * h + iy) * w + ix];
                    }
                }
            }
        }
    }
}

void col2im(const double* col, int c, int h, int w, int ho, int wo, double* out) {
    const int n = ho * wo;
    std::fill(out, out + static_cast<std::size_t>(c) * h * w, 0.0);
    for (int ch = 0; ch < c; ++ch) {
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const double* row = col + static_cast<std::size_t>((ch * 3 + ky) * 3 + kx) * n;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * 2 - 1 + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * 2 - 1 + kx;
                        if (ix < 0 || ix >= w) continue;
                        out[(static_cast<std::size_t>(ch) * h + iy) * w + ix] += row[oy * wo + ox];
                    }
                }
            }
        }
    }
}

struct ConvCache {
    int cin = 0, side_in = 0, cout = 0, side_out = 0;
    std::vector<double> col;
    std::vector<double> out;  // post-activation
};

struct ForwardCache {
    std::array<ConvCache, Network::kConvLayers> conv;
    std::vector<double> pooled;
    std::vector<double> mask;  // dropout multipliers, empty when disabled
    std::array<std::vector<double>, Network::kLinearLayers + 1> fc;  // fc[0] input, fc[k] output of layer k
};

void check_input(const NetConfig& cfg, const Tensor& input) {
    if (input.shape != std::vector<int>{cfg.channels, cfg.input_side, cfg.input_side} ||
        input.data.size() != element_count(input.shape)) {
        throw ShapeMismatch("network expects input [" + std::to_string(cfg.channels) + ", " +
                            std::to_string(cfg.input_side) + ", " + std::to_string(cfg.input_side) + "]");
    }
}

std::vector<double> run_forward(const NetConfig& cfg, const std::vector<Tensor>& p, const Tensor& input,
                                const std::vector<double>* dropout_mask, ForwardCache& cache) {
    const double* x = input.data.data();
    int cin = cfg.channels;
    int side = cfg.input_side;
    for (int l = 0; l < Network::kConvLayers; ++l) {
        ConvCache& c = cache.conv[static_cast<std::size_t>(l)];
        c.cin = cin;
        c.side_in = side;
        c.cout = cfg.conv_widths[static_cast<std::size_t>(l)];
        c.side_out = conv_output_side(side);
        const int n = c.side_out * c.side_out;
        const int k = cin * 9;
        c.col.resize(static_cast<std::size_t>(k) * n);
        im2col(x, cin, side, side, c.side_out, c.side_out, c.col.data());
        c.out.resize(static_cast<std::size_t>(c.cout) * n);
        const Tensor& wt = p[static_cast<std::size_t>(2 * l)];
        const Tensor& bt = p[static_cast<std::size_t>(2 * l + 1)];
        MapMat out(c.out.data(), c.cout, n);
        out.noalias() = CMapMat(wt.data.data(), c.cout, k) * CMapMat(c.col.data(), k, n);
        out.colwise() += CMapVec(bt.data.data(), c.cout);
        out = out.cwiseMax(0.0);
        x = c.out.data();
        cin = c.cout;
        side = c.side_out;
    }

    const ConvCache& last = cache.conv.back();
    const int n_last = last.side_out * last.side_out;
    cache.pooled.resize(static_cast<std::size_t>(last.cout));
    for (int ch = 0; ch < last.cout; ++ch) {
        double sum = 0.0;
        for (int i = 0; i < n_last; ++i) sum += last.out[static_cast<std::size_t>(ch) * n_last + i];
        cache.pooled[static_cast<std::size_t>(ch)] = sum / n_last;
    }

    cache.fc[0] = cache.pooled;
    if (dropout_mask) {
        cache.mask = *dropout_mask;
        for (std::size_t i = 0; i < cache.fc[0].size(); ++i) cache.fc[0][i] *= cache.mask[i];
    } else {
        cache.mask.clear();
    }

    for (int l = 0; l < Network::kLinearLayers; ++l) {
        const Tensor& wt = p[static_cast<std::size_t>(2 * (Network::kConvLayers + l))];
        const Tensor& bt = p[static_cast<std::size_t>(2 * (Network::kConvLayers + l) + 1)];
        const auto& in = cache.fc[static_cast<std::size_t>(l)];
        auto& out = cache.fc[static_cast<std::size_t>(l + 1)];
        const int rows = wt.shape[0], cols = wt.shape[1];
        out.resize(static_cast<std::size_t>(rows));
        MapVec y(out.data(), rows);
        y.noalias() = CMapMat(wt.data.data(), rows, cols) * CMapVec(in.data(), cols);
        y += CMapVec(bt.data.data(), rows);
        if (l + 1 < Network::kLinearLayers) y = y.cwiseMax(0.0);
    }
    return cache.fc.back();
}

}  // namespace

Tensor::Tensor(std::vector<int> dims, double fill) : shape(std::move(dims)), data(element_count(shape), fill) {}

std::size_t element_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(std::max(d, 0));
    return n;
}

void NetConfig::validate() const {
    if (channels < 1) throw InvalidSpec("network channels must be >= 1");
    if (input_side < 1) throw InvalidSpec("input side must be >= 1");
    for (int w : conv_widths) {
        if (w < 1) throw InvalidSpec("convolution widths must be >= 1");
    }
    for (int h : hidden) {
        if (h < 1) throw InvalidSpec("hidden widths must be >= 1");
    }
    if (outputs < 1) throw InvalidSpec("outputs must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidSpec("dropout rate must be in [0, 1)");
}

Network::Network(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    build_shapes();
    Rng rng(seed);
    for (std::size_t i = 0; i < params_.size(); i += 2) {
        Tensor& w = params_[i];
        const std::size_t fan_in = element_count(w.shape) / static_cast<std::size_t>(w.shape[0]);
        const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& v : w.data) v = sd * rng.normal();
    }
}

void Network::build_shapes() {
    names_.clear();
    params_.clear();
    int cin = cfg_.channels;
    for (int l = 0; l < kConvLayers; ++l) {
        const int cout = cfg_.conv_widths[static_cast<std::size_t>(l)];
        names_.push_back("conv" + std::to_string(l + 1) + ".weight");
        params_.emplace_back(std::vector<int>{cout, cin, 3, 3});
        names_.push_back("conv" + std::to_string(l + 1) + ".bias");
        params_.emplace_back(std::vector<int>{cout});
        cin = cout;
    }
    const std::array<int, kLinearLayers + 1> widths{cin, cfg_.hidden[0], cfg_.hidden[1], cfg_.outputs};
    for (int l = 0; l < kLinearLayers; ++l) {
        const auto u = static_cast<std::size_t>(l);
        names_.push_back("fc" + std::to_string(l + 1) + ".weight");
        params_.emplace_back(std::vector<int>{widths[u + 1], widths[u]});
        names_.push_back("fc" + std::to_string(l + 1) + ".bias");
        params_.emplace_back(std::vector<int>{widths[u + 1]});
    }
}

std::vector<Tensor> Network::zero_gradients() const {
    std::vector<Tensor> g;
    g.reserve(params_.size());
    for (const Tensor& p : params_) g.emplace_back(p.shape);
    return g;
}

void Network::set_parameters(std::vector<Tensor> params) {
    if (params.size() != params_.size()) throw ShapeMismatch("parameter count differs from the architecture");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].shape != params_[i].shape || params[i].data.size() != params_[i].data.size()) {
            throw ShapeMismatch("tensor " + names_[i] + " has the wrong shape");
        }
    }
    params_ = std::move(params);
}

std::vector<double> Network::forward(const Tensor& input) const {
    check_input(cfg_, input);
    ForwardCache cache;
    return run_forward(cfg_, params_, input, nullptr, cache);
}

double Network::accumulate_gradient(const Tensor& input, const std::vector<double>& target,
                                    std::uint64_t dropout_seed, double weight,
                                    std::vector<Tensor>& grads) const {
    check_input(cfg_, input);
    if (target.size() != static_cast<std::size_t>(cfg_.outputs)) throw ShapeMismatch("target size differs from outputs");
    if (grads.size() != params_.size()) throw ShapeMismatch("gradient buffer does not match parameters");

    const int pooled = cfg_.conv_widths.back();
    std::vector<double> mask;
    const std::vector<double>* mask_ptr = nullptr;
    if (cfg_.dropout > 0.0) {
        Rng rng(dropout_seed);
        const double keep = 1.0 - cfg_.dropout;
        mask.resize(static_cast<std::size_t>(pooled));
        for (double& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
        mask_ptr = &mask;
    }

    ForwardCache cache;
    const std::vector<double> y = run_forward(cfg_, params_, input, mask_ptr, cache);

    const double n_out = static_cast<double>(y.size());
    double loss = 0.0;
    std::vector<double> delta(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - target[i];
        loss += 0.5 * e * e / n_out;
        delta[i] = weight * e / n_out;
    }

    // Linear stack, last to first.
    for (int l = kLinearLayers - 1; l >= 0; --l) {
        const std::size_t wi = static_cast<std::size_t>(2 * (kConvLayers + l));
        const Tensor& wt = params_[wi];
        const int rows = wt.shape[0], cols = wt.shape[1];
        const auto& in = cache.fc[static_cast<std::size_t>(l)];
        CMapVec d(delta.data(), rows);
        MapMat(grads[wi].data.data(), rows, cols).noalias() += d * CMapVec(in.data(), cols).transpose();
        MapVec(grads[wi + 1].data.data(), rows) += d;
        std::vector<double> prev(static_cast<std::size_t>(cols));
        MapVec(prev.data(), cols).noalias() = CMapMat(wt.data.data(), rows, cols).transpose() * d;
        if (l > 0) {
            for (std::size_t i = 0; i < prev.size(); ++i) {
                if (in[i] <= 0.0) prev[i] = 0.0;
            }
        }
        delta = std::move(prev);
    }
    if (!cache.mask.empty()) {
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= cache.mask[i];
    }

    // Pooling spreads the gradient evenly; then the convolution stack.
    const ConvCache& last = cache.conv.back();
    const int n_last = last.side_out * last.side_out;
    std::vector<double> dout(static_cast<std::size_t>(last.cout) * n_last);
    for (int ch = 0; ch < last.cout; ++ch) {
        for (int i = 0; i < n_last; ++i) {
            dout[static_cast<std::size_t>(ch) * n_last + i] = delta[static_cast<std::size_t>(ch)] / n_last;
        }
    }
    std::vector<double> dcol, din;
    for (int l = kConvLayers - 1; l >= 0; --l) {
        const ConvCache& c = cache.conv[static_cast<std::size_t>(l)];
        const int n = c.side_out * c.side_out;
        const int k = c.cin * 9;
        for (std::size_t i = 0; i < dout.size(); ++i) {
            if (c.out[i] <= 0.0) dout[i] = 0.0;
        }
        CMapMat d(dout.data(), c.cout, n);
        const auto wi = static_cast<std::size_t>(2 * l);
        MapMat(grads[wi].data.data(), c.cout, k).noalias() += d * CMapMat(c.col.data(), k, n).transpose();
        MapVec(grads[wi + 1].data.data(), c.cout) += d.rowwise().sum();
        if (l == 0) break;
        dcol.resize(static_cast<std::size_t>(k) * n);
        MapMat(dcol.data(), k, n).noalias() = CMapMat(params_[wi].data.data(), c.cout, k).transpose() * d;
        din.resize(static_cast<std::size_t>(c.cin) * c.side_in * c.side_in);
        col2im(dcol.data(), c.cin, c.side_in, c.side_in, c.side_out, c.side_out, din.data());
        dout.swap(din);
    }
    return loss;
}

Adam::Adam(const std::vector<Tensor>& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const Tensor& p : params) {
        m_.emplace_back(p.data.size(), 0.0);
        v_.emplace_back(p.data.size(), 0.0);
    }
}

void Adam::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double learning_rate) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].data;
        const auto& g = grads[i].data;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            p[j] -= learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
        }
    }
}

namespace {

constexpr char kMagic[] = "STBW1";

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

class Reader {
public:
    Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

    bool done() const { return pos_ >= data_.size(); }

    std::uint64_t bytes(int n) {
        if (pos_ + static_cast<std::size_t>(n) > data_.size()) throw IoFailure("truncated weight file " + path_);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
        }
        return v;
    }

    std::string text(std::size_t n) {
        if (pos_ + n > data_.size()) throw IoFailure("truncated weight file " + path_);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::string out(kMagic);
    for (const auto& [name, t] : tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t.data) put_f64(out, v);
    }
    write_file_atomic(path, out);
}

std::vector<NamedTensor> read_tensor_file(const std::string& path) {
    const std::string data = read_file(path);
    const std::size_t magic_len = std::strlen(kMagic);
    if (data.compare(0, magic_len, kMagic) != 0) throw IoFailure("bad magic in weight file " + path);
    Reader r(data, path);
    r.text(magic_len);
    std::vector<NamedTensor> out;
    while (!r.done()) {
        NamedTensor nt;
        const auto name_len = static_cast<std::size_t>(r.bytes(4));
        if (name_len > 4096) throw IoFailure("implausible tensor name length in " + path);
        nt.name = r.text(name_len);
        const auto rank = static_cast<std::size_t>(r.bytes(4));
        if (rank > 8) throw IoFailure("implausible tensor rank in " + path);
        for (std::size_t i = 0; i < rank; ++i) nt.tensor.shape.push_back(static_cast<int>(r.bytes(4)));
        const std::size_t n = element_count(nt.tensor.shape);
        if (n > (data.size() / 8) + 1) throw IoFailure("tensor larger than file in " + path);
        nt.tensor.data.resize(n);
        for (double& v : nt.tensor.data) v = std::bit_cast<double>(r.bytes(8));
        out.push_back(std::move(nt));
    }
    return out;
}

}  // namespace synthstab
