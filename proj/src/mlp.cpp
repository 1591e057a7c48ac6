#include "entangle/mlp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "entangle/errors.hpp"

namespace entangle::nn {

namespace {

std::atomic<int> g_gemm_threads{1};

constexpr std::size_t kKBlock = 64;
constexpr std::size_t kParallelCutoff = std::size_t(1) << 18;

// C (m x n) = A (m x k) B (k x n). Each output element accumulates in a fixed
// order (k-blocks ascending, k ascending), so results are independent of the
// worker count. Two C rows per pass reuse the loaded B rows.
void gemm_nn(const double* __restrict a, const double* __restrict b, double* __restrict c,
             std::size_t m, std::size_t k, std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    const int threads = (m * k * n >= kParallelCutoff) ? g_gemm_threads.load() : 1;
    const std::size_t pairs = m / 2;
    for (std::size_t kb = 0; kb < k; kb += kKBlock) {
        const std::size_t ke = std::min(k, kb + kKBlock);
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1)
        for (std::size_t pi = 0; pi < pairs; ++pi) {
            const std::size_t i = 2 * pi;
            const double* __restrict ai = a + i * k;
            const double* __restrict ai2 = ai + k;
            double* __restrict ci = c + i * n;
            double* __restrict ci2 = ci + n;
            std::size_t kk = kb;
            for (; kk + 4 <= ke; kk += 4) {
                const double a0 = ai[kk], a1 = ai[kk + 1], a2 = ai[kk + 2], a3 = ai[kk + 3];
                const double d0 = ai2[kk], d1 = ai2[kk + 1], d2 = ai2[kk + 2], d3 = ai2[kk + 3];
                const double* __restrict b0 = b + kk * n;
                const double* __restrict b1 = b0 + n;
                const double* __restrict b2 = b1 + n;
                const double* __restrict b3 = b2 + n;
                for (std::size_t j = 0; j < n; ++j) {
                    ci[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
                    ci2[j] += d0 * b0[j] + d1 * b1[j] + d2 * b2[j] + d3 * b3[j];
                }
            }
            for (; kk < ke; ++kk) {
                const double a0 = ai[kk], d0 = ai2[kk];
                const double* __restrict b0 = b + kk * n;
                for (std::size_t j = 0; j < n; ++j) {
                    ci[j] += a0 * b0[j];
                    ci2[j] += d0 * b0[j];
                }
            }
        }
        if (m % 2 != 0) {
            const std::size_t i = m - 1;
            const double* __restrict ai = a + i * k;
            double* __restrict ci = c + i * n;
            std::size_t kk = kb;
            for (; kk + 4 <= ke; kk += 4) {
                const double a0 = ai[kk], a1 = ai[kk + 1], a2 = ai[kk + 2], a3 = ai[kk + 3];
                const double* __restrict b0 = b + kk * n;
                const double* __restrict b1 = b0 + n;
                const double* __restrict b2 = b1 + n;
                const double* __restrict b3 = b2 + n;
                for (std::size_t j = 0; j < n; ++j)
                    ci[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
            }
            for (; kk < ke; ++kk) {
                const double a0 = ai[kk];
                const double* __restrict b0 = b + kk * n;
                for (std::size_t j = 0; j < n; ++j) ci[j] += a0 * b0[j];
            }
        }
    }
}

// C (k x n) = A^T B with A (m x k), B (m x n). Two C rows per pass.
void gemm_tn(const double* __restrict a, const double* __restrict b, double* __restrict c,
             std::size_t m, std::size_t k, std::size_t n) {
    const int threads = (m * k * n >= kParallelCutoff) ? g_gemm_threads.load() : 1;
    const std::size_t pairs = k / 2;
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1)
    for (std::size_t pk = 0; pk < pairs; ++pk) {
        const std::size_t kk = 2 * pk;
        double* __restrict ck = c + kk * n;
        double* __restrict ck2 = ck + n;
        std::fill(ck, ck + 2 * n, 0.0);
        std::size_t i = 0;
        for (; i + 4 <= m; i += 4) {
            const double a0 = a[i * k + kk], a1 = a[(i + 1) * k + kk];
            const double a2 = a[(i + 2) * k + kk], a3 = a[(i + 3) * k + kk];
            const double d0 = a[i * k + kk + 1], d1 = a[(i + 1) * k + kk + 1];
            const double d2 = a[(i + 2) * k + kk + 1], d3 = a[(i + 3) * k + kk + 1];
            const double* __restrict b0 = b + i * n;
            const double* __restrict b1 = b0 + n;
            const double* __restrict b2 = b1 + n;
            const double* __restrict b3 = b2 + n;
            for (std::size_t j = 0; j < n; ++j) {
                ck[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
                ck2[j] += d0 * b0[j] + d1 * b1[j] + d2 * b2[j] + d3 * b3[j];
            }
        }
        for (; i < m; ++i) {
            const double a0 = a[i * k + kk], d0 = a[i * k + kk + 1];
            const double* __restrict b0 = b + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                ck[j] += a0 * b0[j];
                ck2[j] += d0 * b0[j];
            }
        }
    }
    if (k % 2 != 0) {
        const std::size_t kk = k - 1;
        double* __restrict ck = c + kk * n;
        std::fill(ck, ck + n, 0.0);
        std::size_t i = 0;
        for (; i + 4 <= m; i += 4) {
            const double a0 = a[i * k + kk], a1 = a[(i + 1) * k + kk];
            const double a2 = a[(i + 2) * k + kk], a3 = a[(i + 3) * k + kk];
            const double* __restrict b0 = b + i * n;
            const double* __restrict b1 = b0 + n;
            const double* __restrict b2 = b1 + n;
            const double* __restrict b3 = b2 + n;
            for (std::size_t j = 0; j < n; ++j)
                ck[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
        }
        for (; i < m; ++i) {
            const double a0 = a[i * k + kk];
            const double* __restrict b0 = b + i * n;
            for (std::size_t j = 0; j < n; ++j) ck[j] += a0 * b0[j];
        }
    }
}

void add_bias_relu(RealMatrix& z, std::size_t rows, const std::vector<double>& bias, bool relu) {
    for (std::size_t i = 0; i < rows; ++i) {
        double* r = z.row(i);
        for (std::size_t j = 0; j < z.cols; ++j) {
            double v = r[j] + bias[j];
            r[j] = relu && v < 0.0 ? 0.0 : v;
        }
    }
}

void softmax_rows(RealMatrix& z, std::size_t rows) {
    for (std::size_t i = 0; i < rows; ++i) {
        double* r = z.row(i);
        double mx = r[0];
        for (std::size_t j = 1; j < z.cols; ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < z.cols; ++j) {
            r[j] = std::exp(r[j] - mx);
            sum += r[j];
        }
        for (std::size_t j = 0; j < z.cols; ++j) r[j] /= sum;
    }
}

struct Workspace {
    std::vector<RealMatrix> acts;    // acts[l]: activations entering layer l; acts[L] = probs
    std::vector<RealMatrix> deltas;  // deltas[l]: gradient w.r.t. layer l pre-activations
    std::vector<RealMatrix> wt;      // transposed weights
    std::size_t capacity = 0;        // allocated row count
};

// Buffers grow to the largest batch seen and are then reused; gemm calls
// operate on the leading `rows` rows only.
void ensure_workspace(Workspace& ws, const Mlp& m, std::size_t rows) {
    const std::size_t layers = m.layer_count();
    if (ws.capacity >= rows && ws.acts.size() == layers + 1) return;
    const std::size_t cap = std::max(rows, ws.capacity);
    ws.acts.assign(layers + 1, RealMatrix());
    ws.deltas.assign(layers, RealMatrix());
    ws.wt.assign(layers, RealMatrix());
    for (std::size_t l = 0; l <= layers; ++l)
        ws.acts[l] = RealMatrix(cap, static_cast<std::size_t>(m.dims[l]));
    for (std::size_t l = 0; l < layers; ++l)
        ws.deltas[l] = RealMatrix(cap, static_cast<std::size_t>(m.dims[l + 1]));
    ws.capacity = cap;
}

void refresh_transposes(Workspace& ws, const Mlp& m) {
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const RealMatrix& w = m.weights[l];
        if (ws.wt[l].rows != w.cols || ws.wt[l].cols != w.rows)
            ws.wt[l] = RealMatrix(w.cols, w.rows);
        for (std::size_t i = 0; i < w.rows; ++i)
            for (std::size_t j = 0; j < w.cols; ++j) ws.wt[l](j, i) = w(i, j);
    }
}

LossReport loss_and_grad_ws(const Mlp& m, const BatchView& labeled, const BatchView& pseudo,
                            double lambda_u, Gradients& grads, Workspace& ws) {
    if (labeled.count == 0) throw DataError("loss_and_grad: labeled batch must be non-empty");
    const std::size_t in_dim = static_cast<std::size_t>(m.input_dim());
    if (labeled.dim != in_dim || (pseudo.count > 0 && pseudo.dim != in_dim))
        throw DataError("loss_and_grad: feature dimension mismatch");

    const std::size_t rows = labeled.count + pseudo.count;
    const std::size_t classes = static_cast<std::size_t>(m.output_dim());
    const std::size_t layers = m.layer_count();
    ensure_workspace(ws, m, rows);
    refresh_transposes(ws, m);

    std::memcpy(ws.acts[0].data.data(), labeled.x, labeled.count * in_dim * sizeof(double));
    if (pseudo.count > 0)
        std::memcpy(ws.acts[0].row(labeled.count), pseudo.x,
                    pseudo.count * in_dim * sizeof(double));

    for (std::size_t l = 0; l < layers; ++l) {
        gemm_nn(ws.acts[l].data.data(), m.weights[l].data.data(), ws.acts[l + 1].data.data(),
                rows, ws.acts[l].cols, ws.acts[l + 1].cols);
        add_bias_relu(ws.acts[l + 1], rows, m.biases[l], l + 1 < layers);
    }
    softmax_rows(ws.acts[layers], rows);

    // Per-sample loss weights: 1/|labeled| and lambda_u/|pseudo|.
    double sup = 0.0, unsup = 0.0;
    const double wl = 1.0 / static_cast<double>(labeled.count);
    const double wp = pseudo.count > 0 ? lambda_u / static_cast<double>(pseudo.count) : 0.0;
    RealMatrix& probs = ws.acts[layers];
    RealMatrix& dout = ws.deltas[layers - 1];
    for (std::size_t i = 0; i < rows; ++i) {
        const bool is_lab = i < labeled.count;
        const int y = is_lab ? labeled.labels[i] : pseudo.labels[i - labeled.count];
        if (y < 0 || y >= static_cast<int>(classes))
            throw DataError("loss_and_grad: label out of range");
        const double* p = probs.row(i);
        double ce = -std::log(std::clamp(p[static_cast<std::size_t>(y)], 1e-12, 1.0));
        if (is_lab) sup += ce;
        else unsup += ce;
        const double w = is_lab ? wl : wp;
        double* d = dout.row(i);
        for (std::size_t j = 0; j < classes; ++j)
            d[j] = w * (p[j] - (static_cast<int>(j) == y ? 1.0 : 0.0));
    }
    sup *= wl;
    if (pseudo.count > 0) unsup /= static_cast<double>(pseudo.count);

    for (std::size_t l = layers; l-- > 0;) {
        const RealMatrix& delta = ws.deltas[l];
        gemm_tn(ws.acts[l].data.data(), delta.data.data(), grads.weights[l].data.data(), rows,
                ws.acts[l].cols, delta.cols);
        std::vector<double>& db = grads.biases[l];
        std::fill(db.begin(), db.end(), 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            const double* d = delta.row(i);
            for (std::size_t j = 0; j < db.size(); ++j) db[j] += d[j];
        }
        if (l > 0) {
            RealMatrix& dprev = ws.deltas[l - 1];
            gemm_nn(delta.data.data(), ws.wt[l].data.data(), dprev.data.data(), rows, delta.cols,
                    dprev.cols);
            const RealMatrix& act = ws.acts[l];  // post-ReLU activations of layer l
            for (std::size_t i = 0; i < rows; ++i) {
                const double* a = act.row(i);
                double* d = dprev.row(i);
                for (std::size_t j = 0; j < dprev.cols; ++j)
                    if (a[j] <= 0.0) d[j] = 0.0;
            }
        }
    }

    LossReport report;
    report.supervised = sup;
    report.unsupervised = unsup;
    report.lambda_u = lambda_u;
    report.total = sup + lambda_u * unsup;
    return report;
}

}  // namespace

std::size_t Mlp::parameter_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        count += weights[l].rows * weights[l].cols + biases[l].size();
    return count;
}

bool Mlp::all_finite() const {
    for (const RealMatrix& w : weights)
        for (double v : w.data)
            if (!std::isfinite(v)) return false;
    for (const std::vector<double>& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

Mlp mlp_new(const std::vector<int>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw ConfigError("mlp_new: need at least input and output layers");
    for (int d : dims)
        if (d < 1) throw ConfigError("mlp_new: layer dims must be >= 1");
    Mlp m;
    m.dims = dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        RealMatrix w(static_cast<std::size_t>(dims[l]), static_cast<std::size_t>(dims[l + 1]));
        const double std_dev = std::sqrt(2.0 / static_cast<double>(dims[l]));
        for (double& v : w.data) v = std_dev * rng.normal();
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(static_cast<std::size_t>(dims[l + 1]), 0.0);
    }
    return m;
}

std::vector<double> forward(const Mlp& m, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(m.input_dim()))
        throw DataError("forward: input dimension mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw NumericError("forward: non-finite input");
    std::vector<double> cur(x.begin(), x.end());
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const RealMatrix& w = m.weights[l];
        std::vector<double> next(m.biases[l]);
        for (std::size_t i = 0; i < w.rows; ++i) {
            const double a = cur[i];
            if (a == 0.0) continue;
            const double* wr = w.row(i);
            for (std::size_t j = 0; j < w.cols; ++j) next[j] += a * wr[j];
        }
        if (l + 1 < m.layer_count())
            for (double& v : next) v = v < 0.0 ? 0.0 : v;
        cur = std::move(next);
    }
    double mx = *std::max_element(cur.begin(), cur.end());
    double sum = 0.0;
    for (double& v : cur) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : cur) v /= sum;
    return cur;
}

RealMatrix forward_batch(const Mlp& m, const RealMatrix& x) {
    if (x.cols != static_cast<std::size_t>(m.input_dim()))
        throw DataError("forward_batch: input dimension mismatch");
    RealMatrix cur = x;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        RealMatrix next(cur.rows, m.weights[l].cols);
        gemm_nn(cur.data.data(), m.weights[l].data.data(), next.data.data(), cur.rows, cur.cols,
                next.cols);
        add_bias_relu(next, next.rows, m.biases[l], l + 1 < m.layer_count());
        cur = std::move(next);
    }
    softmax_rows(cur, cur.rows);
    return cur;
}

double cross_entropy(std::span<const double> target, std::span<const double> predicted) {
    if (target.size() != predicted.size()) throw DataError("cross_entropy: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i)
        s -= target[i] * std::log(std::clamp(predicted[i], 1e-12, 1.0));
    return s;
}

Gradients Gradients::zeros_like(const Mlp& m) {
    Gradients g;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        g.weights.emplace_back(m.weights[l].rows, m.weights[l].cols);
        g.biases.emplace_back(m.biases[l].size(), 0.0);
    }
    return g;
}

bool Gradients::all_finite() const {
    for (const RealMatrix& w : weights)
        for (double v : w.data)
            if (!std::isfinite(v)) return false;
    for (const std::vector<double>& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

LossReport loss_and_grad(const Mlp& m, const BatchView& labeled, const BatchView& pseudo,
                         double lambda_u, Gradients& grads) {
    Workspace ws;
    return loss_and_grad_ws(m, labeled, pseudo, lambda_u, grads, ws);
}

AdamState AdamState::zeros_like(const Mlp& m) {
    AdamState s;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        s.m_w.emplace_back(m.weights[l].rows, m.weights[l].cols);
        s.v_w.emplace_back(m.weights[l].rows, m.weights[l].cols);
        s.m_b.emplace_back(m.biases[l].size(), 0.0);
        s.v_b.emplace_back(m.biases[l].size(), 0.0);
    }
    return s;
}

void adam_step(Mlp& m, const Gradients& grads, AdamState& state, double lr) {
    if (lr <= 0.0) throw ConfigError("adam_step: lr must be positive");
    if (!grads.all_finite())
        throw NumericError("adam_step: non-finite gradients; training aborted");
    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    auto update = [&](double* w, double* mm, double* vv, const double* g, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            mm[i] = b1 * mm[i] + (1.0 - b1) * g[i];
            vv[i] = b2 * vv[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = mm[i] / c1;
            const double vhat = vv[i] / c2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    };
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        update(m.weights[l].data.data(), state.m_w[l].data.data(), state.v_w[l].data.data(),
               grads.weights[l].data.data(), m.weights[l].data.size());
        update(m.biases[l].data(), state.m_b[l].data(), state.v_b[l].data(),
               grads.biases[l].data(), m.biases[l].size());
    }
}

TrainView pack_training_view(const Dataset& ds) {
    TrainView v;
    v.x = RealMatrix(ds.size(), ds.feature_dim);
    v.labels.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Sample& s = ds.samples[i];
        if (!s.label) throw DataError("pack_training_view: sample without label");
        std::copy(s.features.begin(), s.features.end(), v.x.row(i));
        v.labels.push_back(*s.label);
    }
    return v;
}

void train_epochs_inplace(Mlp& m, AdamState& state, const TrainView& labeled,
                          const TrainView& pseudo, double lambda_u, int epochs, double lr,
                          int batch, Rng& rng) {
    const std::size_t nl = labeled.count();
    const std::size_t np = pseudo.count();
    if (nl == 0) throw DataError("train_epochs: labeled set must be non-empty");
    if (epochs < 1) throw ConfigError("train_epochs: epochs must be >= 1");
    if (batch < 1) throw ConfigError("train_epochs: batch must be >= 1");
    const std::size_t in_dim = labeled.x.cols;
    const std::size_t steps = (nl + batch - 1) / batch;

    std::vector<std::size_t> perm_l(nl), perm_p(np);

    RealMatrix xl(std::min<std::size_t>(batch, nl), in_dim);
    RealMatrix xp(np > 0 ? np / steps + 1 : 0, in_dim);
    std::vector<int> yl, yp;
    Gradients grads = Gradients::zeros_like(m);
    Workspace ws;

    for (int e = 0; e < epochs; ++e) {
        // Each epoch shuffles from the identity permutation, so an epoch's
        // batch order depends only on the rng draws, not on call boundaries.
        for (std::size_t i = 0; i < nl; ++i) perm_l[i] = i;
        rng.shuffle(perm_l);
        if (np > 0) {
            for (std::size_t i = 0; i < np; ++i) perm_p[i] = i;
            rng.shuffle(perm_p);
        }
        std::size_t l0 = 0, p0 = 0;
        const std::size_t p_base = np / steps, p_rem = np % steps;
        for (std::size_t s = 0; s < steps; ++s) {
            const std::size_t lb = std::min<std::size_t>(batch, nl - l0);
            yl.clear();
            for (std::size_t i = 0; i < lb; ++i) {
                std::size_t idx = perm_l[l0 + i];
                std::memcpy(xl.row(i), labeled.x.row(idx), in_dim * sizeof(double));
                yl.push_back(labeled.labels[idx]);
            }
            const std::size_t pc = np > 0 ? p_base + (s < p_rem ? 1 : 0) : 0;
            yp.clear();
            for (std::size_t i = 0; i < pc; ++i) {
                std::size_t idx = perm_p[p0 + i];
                std::memcpy(xp.row(i), pseudo.x.row(idx), in_dim * sizeof(double));
                yp.push_back(pseudo.labels[idx]);
            }
            BatchView lab{xl.data.data(), yl.data(), lb, in_dim};
            BatchView ps{pc > 0 ? xp.data.data() : nullptr, pc > 0 ? yp.data() : nullptr, pc,
                         in_dim};
            LossReport report = loss_and_grad_ws(m, lab, ps, lambda_u, grads, ws);
            if (!std::isfinite(report.total))
                throw NumericError("train_epochs: non-finite loss; training aborted");
            adam_step(m, grads, state, lr);
            l0 += lb;
            p0 += pc;
        }
    }
}

Mlp train_epochs(Mlp m, const Dataset& labeled, const Dataset& pseudo, double lambda_u,
                 int epochs, double lr, int batch, Rng& rng) {
    TrainView lv = pack_training_view(labeled);
    TrainView pv;
    if (pseudo.size() > 0) pv = pack_training_view(pseudo);
    else pv.x = RealMatrix(0, lv.x.cols);
    AdamState state = AdamState::zeros_like(m);
    train_epochs_inplace(m, state, lv, pv, lambda_u, epochs, lr, batch, rng);
    return m;
}

std::string model_to_string(const Mlp& m) {
    std::string out = "mlp-v1 dims=";
    for (std::size_t i = 0; i < m.dims.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(m.dims[i]);
    }
    out += " activation=relu output=softmax\n";
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        out += "W" + std::to_string(l + 1) + "=";
        for (std::size_t i = 0; i < m.weights[l].data.size(); ++i) {
            if (i) out += ',';
            out += format_double(m.weights[l].data[i]);
        }
        out += "\nb" + std::to_string(l + 1) + "=";
        for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
            if (i) out += ',';
            out += format_double(m.biases[l][i]);
        }
        out += "\n";
    }
    return out;
}

namespace {

std::vector<double> parse_float_list(const std::string& text, std::size_t line) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t pos = text.find(',', start);
        std::string tok =
            pos == std::string::npos ? text.substr(start) : text.substr(start, pos - start);
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            throw DataError("model line " + std::to_string(line) + ": bad float '" + tok + "'");
        out.push_back(v);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

Mlp model_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("model line 1: empty model file");
    if (line.rfind("mlp-v1 ", 0) != 0)
        throw DataError("model line 1: unsupported model version tag");
    std::istringstream head(line);
    std::string tag, dims_tok, act_tok, out_tok;
    head >> tag >> dims_tok >> act_tok >> out_tok;
    if (dims_tok.rfind("dims=", 0) != 0 || act_tok != "activation=relu" ||
        out_tok != "output=softmax")
        throw DataError("model line 1: malformed model header");
    Mlp m;
    for (double d : parse_float_list(dims_tok.substr(5), 1))
        m.dims.push_back(static_cast<int>(d));
    if (m.dims.size() < 2) throw DataError("model line 1: need at least two layers");

    std::size_t lineno = 1;
    for (std::size_t l = 0; l + 1 < m.dims.size(); ++l) {
        auto expect = [&](const std::string& prefix) -> std::vector<double> {
            if (!std::getline(in, line))
                throw DataError("model line " + std::to_string(lineno + 1) + ": truncated file");
            ++lineno;
            if (line.rfind(prefix, 0) != 0)
                throw DataError("model line " + std::to_string(lineno) + ": expected " + prefix);
            return parse_float_list(line.substr(prefix.size()), lineno);
        };
        std::vector<double> w = expect("W" + std::to_string(l + 1) + "=");
        std::vector<double> b = expect("b" + std::to_string(l + 1) + "=");
        const std::size_t rows = static_cast<std::size_t>(m.dims[l]);
        const std::size_t cols = static_cast<std::size_t>(m.dims[l + 1]);
        if (w.size() != rows * cols || b.size() != cols)
            throw DataError("model line " + std::to_string(lineno) + ": tensor shape mismatch");
        RealMatrix wm(rows, cols);
        wm.data = std::move(w);
        m.weights.push_back(std::move(wm));
        m.biases.push_back(std::move(b));
    }
    if (!m.all_finite()) throw NumericError("model file contains non-finite parameters");
    return m;
}

void save_model(const Mlp& m, const std::filesystem::path& path) {
    std::string text = model_to_string(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

Mlp load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_string(buf.str());
}

void set_gemm_threads(int threads) { g_gemm_threads.store(std::max(1, threads)); }
int gemm_threads() { return g_gemm_threads.load(); }

}  // namespace entangle::nn
