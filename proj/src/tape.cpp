#include "cobert/tape.hpp"

#include <cmath>
#include <string>

namespace cobert {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

void check(bool cond, const char* msg) {
    if (!cond) throw InvalidInputError(msg);
}

// C = A * B with a per-row double accumulator (ikj order).
Matrix mm_nn(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    std::vector<double> acc(static_cast<size_t>(b.cols));
    for (int i = 0; i < a.rows; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const float* arow = a.row(i);
        for (int k = 0; k < a.cols; ++k) {
            double aik = arow[k];
            if (aik == 0.0) continue;
            const float* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) acc[j] += aik * brow[j];
        }
        float* crow = c.row(i);
        for (int j = 0; j < b.cols; ++j) crow[j] = static_cast<float>(acc[j]);
    }
    return c;
}

// C = A * B^T; rows of both operands are contiguous.
Matrix mm_nt(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const float* arow = a.row(i);
        float* crow = c.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const float* brow = b.row(j);
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += double(arow[k]) * brow[k];
            crow[j] = static_cast<float>(acc);
        }
    }
    return c;
}

// C = A^T * B.
Matrix mm_tn(const Matrix& a, const Matrix& b) {
    Matrix c(a.cols, b.cols);
    std::vector<double> acc(static_cast<size_t>(a.cols) * b.cols, 0.0);
    for (int k = 0; k < a.rows; ++k) {
        const float* arow = a.row(k);
        const float* brow = b.row(k);
        for (int i = 0; i < a.cols; ++i) {
            double aki = arow[i];
            if (aki == 0.0) continue;
            double* arow_acc = acc.data() + static_cast<size_t>(i) * b.cols;
            for (int j = 0; j < b.cols; ++j) arow_acc[j] += aki * brow[j];
        }
    }
    for (size_t t = 0; t < c.data.size(); ++t) c.data[t] = static_cast<float>(acc[t]);
    return c;
}

void add_into(Matrix& dst, const Matrix& src) {
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

Var Tape::push(Matrix value, bool needs_grad, std::function<void()> back) {
    Node n;
    n.owned = std::move(value);
    n.value = &n.owned;
    n.needs_grad = needs_grad && track_;
    if (n.needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    // owned matrix moved into the vector; fix the self-pointer
    nodes_.back().value = &nodes_.back().owned;
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix v) { return push(std::move(v), false, nullptr); }

Var Tape::leaf(Matrix v) { return push(std::move(v), true, nullptr); }

Var Tape::param(const Matrix& external, int registry_id) {
    Node n;
    n.value = &external;
    n.needs_grad = track_;
    nodes_.push_back(std::move(n));
    Var v{static_cast<int>(nodes_.size()) - 1};
    params_.emplace_back(registry_id, v);
    return v;
}

const Matrix& Tape::grad(Var v) const {
    static const Matrix kEmpty;
    const Node& n = nodes_[v.id];
    return n.grad.data.empty() ? kEmpty : n.grad;
}

Matrix& Tape::gbuf(int id) {
    Node& n = nodes_[id];
    if (n.grad.data.empty()) n.grad = Matrix(n.value->rows, n.value->cols);
    return n.grad;
}

void Tape::backward(Var out) {
    if (!track_) throw InvalidInputError("backward on a non-tracking tape");
    check(out.ok() && val(out).rows == 1 && val(out).cols == 1, "backward expects a 1x1 output");
    gbuf(out.id).data[0] = 1.0f;
    for (int id = out.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.back && touched(id)) n.back();
    }
}

Var Tape::add(Var a, Var b) {
    check(val(a).same_shape(val(b)), "add: shape mismatch");
    Matrix out = val(a);
    add_into(out, val(b));
    bool ng = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, b, v] {
            const Matrix& g = nodes_[v.id].grad;
            if (nodes_[a.id].needs_grad) add_into(gbuf(a.id), g);
            if (nodes_[b.id].needs_grad) add_into(gbuf(b.id), g);
        };
    }
    return v;
}

Var Tape::scale(Var a, float s) {
    Matrix out = val(a);
    for (float& x : out.data) x *= s;
    bool ng = nodes_[a.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, v, s] {
            const Matrix& g = nodes_[v.id].grad;
            Matrix& ga = gbuf(a.id);
            for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += s * g.data[i];
        };
    }
    return v;
}

Var Tape::add_row(Var a, Var bias) {
    const Matrix& A = val(a);
    const Matrix& B = val(bias);
    check(B.rows == 1 && B.cols == A.cols, "add_row: bias must be 1 x cols");
    Matrix out = A;
    for (int i = 0; i < A.rows; ++i) {
        float* orow = out.row(i);
        for (int j = 0; j < A.cols; ++j) orow[j] += B.data[j];
    }
    bool ng = nodes_[a.id].needs_grad || nodes_[bias.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, bias, v] {
            const Matrix& g = nodes_[v.id].grad;
            if (nodes_[a.id].needs_grad) add_into(gbuf(a.id), g);
            if (nodes_[bias.id].needs_grad) {
                Matrix& gb = gbuf(bias.id);
                for (int i = 0; i < g.rows; ++i) {
                    const float* grow = g.row(i);
                    for (int j = 0; j < g.cols; ++j) gb.data[j] += grow[j];
                }
            }
        };
    }
    return v;
}

Var Tape::matmul(Var a, Var b) {
    const Matrix& A = val(a);
    const Matrix& B = val(b);
    check(A.cols == B.rows, "matmul: inner dimension mismatch");
    bool ng = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    Var v = push(mm_nn(A, B), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, b, v] {
            const Matrix& g = nodes_[v.id].grad;
            if (nodes_[a.id].needs_grad) add_into(gbuf(a.id), mm_nt(g, val(b)));
            if (nodes_[b.id].needs_grad) add_into(gbuf(b.id), mm_tn(val(a), g));
        };
    }
    return v;
}

Var Tape::matmul_nt(Var a, Var b) {
    const Matrix& A = val(a);
    const Matrix& B = val(b);
    check(A.cols == B.cols, "matmul_nt: trailing dimension mismatch");
    bool ng = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    Var v = push(mm_nt(A, B), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, b, v] {
            const Matrix& g = nodes_[v.id].grad;
            if (nodes_[a.id].needs_grad) add_into(gbuf(a.id), mm_nn(g, val(b)));
            if (nodes_[b.id].needs_grad) add_into(gbuf(b.id), mm_tn(g, val(a)));
        };
    }
    return v;
}

Var Tape::transpose(Var a) {
    const Matrix& A = val(a);
    Matrix out(A.cols, A.rows);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) out.at(j, i) = A.at(i, j);
    bool ng = nodes_[a.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, v] {
            const Matrix& g = nodes_[v.id].grad;
            Matrix& ga = gbuf(a.id);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) ga.at(j, i) += g.at(i, j);
        };
    }
    return v;
}

Var Tape::slice_cols(Var a, int c0, int c1) {
    const Matrix& A = val(a);
    check(0 <= c0 && c0 < c1 && c1 <= A.cols, "slice_cols: bad range");
    Matrix out(A.rows, c1 - c0);
    for (int i = 0; i < A.rows; ++i) {
        const float* arow = A.row(i);
        float* orow = out.row(i);
        for (int j = c0; j < c1; ++j) orow[j - c0] = arow[j];
    }
    bool ng = nodes_[a.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, v, c0] {
            const Matrix& g = nodes_[v.id].grad;
            Matrix& ga = gbuf(a.id);
            for (int i = 0; i < g.rows; ++i) {
                const float* grow = g.row(i);
                float* garow = ga.row(i);
                for (int j = 0; j < g.cols; ++j) garow[c0 + j] += grow[j];
            }
        };
    }
    return v;
}

Var Tape::concat_cols(const std::vector<Var>& vs) {
    check(!vs.empty(), "concat_cols: empty input");
    int rows = val(vs[0]).rows;
    int total = 0;
    bool ng = false;
    for (Var x : vs) {
        check(val(x).rows == rows, "concat_cols: row mismatch");
        total += val(x).cols;
        ng = ng || nodes_[x.id].needs_grad;
    }
    Matrix out(rows, total);
    int off = 0;
    for (Var x : vs) {
        const Matrix& X = val(x);
        for (int i = 0; i < rows; ++i) {
            const float* xrow = X.row(i);
            float* orow = out.row(i);
            for (int j = 0; j < X.cols; ++j) orow[off + j] = xrow[j];
        }
        off += X.cols;
    }
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        std::vector<Var> parts = vs;
        nodes_[v.id].back = [this, parts, v] {
            const Matrix& g = nodes_[v.id].grad;
            int off2 = 0;
            for (Var x : parts) {
                const Matrix& X = val(x);
                if (nodes_[x.id].needs_grad) {
                    Matrix& gx = gbuf(x.id);
                    for (int i = 0; i < g.rows; ++i) {
                        const float* grow = g.row(i);
                        float* gxrow = gx.row(i);
                        for (int j = 0; j < X.cols; ++j) gxrow[j] += grow[off2 + j];
                    }
                }
                off2 += X.cols;
            }
        };
    }
    return v;
}

Var Tape::rows_lookup(Var table, std::vector<int> ids) {
    const Matrix& T = val(table);
    for (int id : ids) check(0 <= id && id < T.rows, "rows_lookup: id out of range");
    Matrix out(static_cast<int>(ids.size()), T.cols);
    for (size_t i = 0; i < ids.size(); ++i) {
        const float* trow = T.row(ids[i]);
        float* orow = out.row(static_cast<int>(i));
        for (int j = 0; j < T.cols; ++j) orow[j] = trow[j];
    }
    bool ng = nodes_[table.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, table, v, ids = std::move(ids)] {
            const Matrix& g = nodes_[v.id].grad;
            Matrix& gt = gbuf(table.id);
            for (size_t i = 0; i < ids.size(); ++i) {
                const float* grow = g.row(static_cast<int>(i));
                float* gtrow = gt.row(ids[i]);
                for (int j = 0; j < g.cols; ++j) gtrow[j] += grow[j];
            }
        };
    }
    return v;
}

Var Tape::gelu(Var a) {
    const Matrix& A = val(a);
    Matrix out(A.rows, A.cols);
    for (size_t i = 0; i < A.data.size(); ++i) {
        double x = A.data[i];
        out.data[i] = static_cast<float>(x * 0.5 * (1.0 + std::erf(x * kInvSqrt2)));
    }
    bool ng = nodes_[a.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, v] {
            const Matrix& g = nodes_[v.id].grad;
            const Matrix& A2 = val(a);
            Matrix& ga = gbuf(a.id);
            for (size_t i = 0; i < g.data.size(); ++i) {
                double x = A2.data[i];
                double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
                double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                ga.data[i] += static_cast<float>(g.data[i] * (phi + x * pdf));
            }
        };
    }
    return v;
}

Var Tape::layer_norm(Var a, Var gain, Var bias, float eps) {
    const Matrix& A = val(a);
    const Matrix& G = val(gain);
    const Matrix& B = val(bias);
    check(G.rows == 1 && G.cols == A.cols && B.rows == 1 && B.cols == A.cols,
          "layer_norm: gain/bias must be 1 x cols");
    Matrix out(A.rows, A.cols);
    auto xhat = std::make_shared<Matrix>(A.rows, A.cols);
    auto inv_sigma = std::make_shared<std::vector<double>>(A.rows);
    for (int i = 0; i < A.rows; ++i) {
        const float* arow = A.row(i);
        double mu = 0.0;
        for (int j = 0; j < A.cols; ++j) mu += arow[j];
        mu /= A.cols;
        double var = 0.0;
        for (int j = 0; j < A.cols; ++j) {
            double d = arow[j] - mu;
            var += d * d;
        }
        var /= A.cols;
        double is = 1.0 / std::sqrt(var + eps);
        (*inv_sigma)[i] = is;
        float* xrow = xhat->row(i);
        float* orow = out.row(i);
        for (int j = 0; j < A.cols; ++j) {
            double xh = (arow[j] - mu) * is;
            xrow[j] = static_cast<float>(xh);
            orow[j] = static_cast<float>(xh * G.data[j] + B.data[j]);
        }
    }
    bool ng = nodes_[a.id].needs_grad || nodes_[gain.id].needs_grad || nodes_[bias.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, gain, bias, v, xhat, inv_sigma] {
            const Matrix& g = nodes_[v.id].grad;
            const Matrix& G2 = val(gain);
            int n = g.cols;
            if (nodes_[gain.id].needs_grad || nodes_[bias.id].needs_grad) {
                Matrix& gg = gbuf(gain.id);
                Matrix& gb = gbuf(bias.id);
                for (int i = 0; i < g.rows; ++i) {
                    const float* grow = g.row(i);
                    const float* xrow = xhat->row(i);
                    for (int j = 0; j < n; ++j) {
                        gg.data[j] += grow[j] * xrow[j];
                        gb.data[j] += grow[j];
                    }
                }
            }
            if (nodes_[a.id].needs_grad) {
                Matrix& ga = gbuf(a.id);
                for (int i = 0; i < g.rows; ++i) {
                    const float* grow = g.row(i);
                    const float* xrow = xhat->row(i);
                    double mean_gs = 0.0, mean_gsx = 0.0;
                    for (int j = 0; j < n; ++j) {
                        double gs = double(grow[j]) * G2.data[j];
                        mean_gs += gs;
                        mean_gsx += gs * xrow[j];
                    }
                    mean_gs /= n;
                    mean_gsx /= n;
                    double is = (*inv_sigma)[i];
                    float* garow = ga.row(i);
                    for (int j = 0; j < n; ++j) {
                        double gs = double(grow[j]) * G2.data[j];
                        garow[j] += static_cast<float>(is * (gs - mean_gs - xrow[j] * mean_gsx));
                    }
                }
            }
        };
    }
    return v;
}

Var Tape::masked_softmax(Var scores, const Mask& col_mask) {
    const Matrix& S = val(scores);
    check(col_mask.size() == S.cols, "masked_softmax: mask length != cols");
    if (col_mask.valid_count() == 0) throw DegenerateMaskError("masked_softmax: all columns masked");
    Matrix out(S.rows, S.cols);
    for (int i = 0; i < S.rows; ++i) {
        const float* srow = S.row(i);
        float m = kMaskedScore;
        for (int j = 0; j < S.cols; ++j) {
            if (!col_mask.is_valid(j)) continue;
            if (!std::isfinite(srow[j])) throw NumericError("masked_softmax: non-finite score");
            if (srow[j] > m) m = srow[j];
        }
        double sum = 0.0;
        float* orow = out.row(i);
        for (int j = 0; j < S.cols; ++j) {
            if (col_mask.is_valid(j)) {
                double e = std::exp(double(srow[j]) - m);
                orow[j] = static_cast<float>(e);
                sum += e;
            } else {
                orow[j] = 0.0f;  // masked columns are exactly zero
            }
        }
        double inv = 1.0 / sum;
        for (int j = 0; j < S.cols; ++j) orow[j] = static_cast<float>(orow[j] * inv);
    }
    bool ng = nodes_[scores.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        Mask mask = col_mask;
        nodes_[v.id].back = [this, scores, v, mask = std::move(mask)] {
            const Matrix& g = nodes_[v.id].grad;
            const Matrix& P = val(v);
            Matrix& gs = gbuf(scores.id);
            for (int i = 0; i < g.rows; ++i) {
                const float* grow = g.row(i);
                const float* prow = P.row(i);
                double dotp = 0.0;
                for (int j = 0; j < g.cols; ++j)
                    if (mask.is_valid(j)) dotp += double(grow[j]) * prow[j];
                float* gsrow = gs.row(i);
                for (int j = 0; j < g.cols; ++j)
                    if (mask.is_valid(j))
                        gsrow[j] += static_cast<float>(prow[j] * (double(grow[j]) - dotp));
            }
        };
    }
    return v;
}

Var Tape::masked_max_pool(Var a, const Mask& row_mask) {
    const Matrix& A = val(a);
    check(row_mask.size() == A.rows, "masked_max_pool: mask length != rows");
    if (row_mask.valid_count() == 0) throw DegenerateMaskError("masked_max_pool: all rows masked");
    Matrix out(1, A.cols, kMaskedScore);
    auto argmax = std::make_shared<std::vector<int>>(A.cols, -1);
    for (int i = 0; i < A.rows; ++i) {
        if (!row_mask.is_valid(i)) continue;
        const float* arow = A.row(i);
        for (int j = 0; j < A.cols; ++j) {
            if ((*argmax)[j] < 0 || arow[j] > out.data[j]) {
                out.data[j] = arow[j];
                (*argmax)[j] = i;  // ties keep the first valid row
            }
        }
    }
    bool ng = nodes_[a.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, v, argmax] {
            const Matrix& g = nodes_[v.id].grad;
            Matrix& ga = gbuf(a.id);
            for (int j = 0; j < g.cols; ++j) ga.at((*argmax)[j], j) += g.data[j];
        };
    }
    return v;
}

Var Tape::mean_pool_rows(Var a, const Mask& row_mask) {
    const Matrix& A = val(a);
    check(row_mask.size() == A.rows, "mean_pool_rows: mask length != rows");
    int count = row_mask.valid_count();
    if (count == 0) throw DegenerateMaskError("mean_pool_rows: all rows masked");
    Matrix out(1, A.cols);
    std::vector<double> acc(static_cast<size_t>(A.cols), 0.0);
    for (int i = 0; i < A.rows; ++i) {
        if (!row_mask.is_valid(i)) continue;
        const float* arow = A.row(i);
        for (int j = 0; j < A.cols; ++j) acc[j] += arow[j];
    }
    for (int j = 0; j < A.cols; ++j) out.data[j] = static_cast<float>(acc[j] / count);
    bool ng = nodes_[a.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        Mask mask = row_mask;
        nodes_[v.id].back = [this, a, v, mask = std::move(mask), count] {
            const Matrix& g = nodes_[v.id].grad;
            Matrix& ga = gbuf(a.id);
            float inv = 1.0f / static_cast<float>(count);
            for (int i = 0; i < ga.rows; ++i) {
                if (!mask.is_valid(i)) continue;
                float* garow = ga.row(i);
                for (int j = 0; j < g.cols; ++j) garow[j] += g.data[j] * inv;
            }
        };
    }
    return v;
}

Var Tape::sum_mul(Var a, Var b) {
    const Matrix& A = val(a);
    const Matrix& B = val(b);
    check(A.same_shape(B), "sum_mul: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < A.data.size(); ++i) acc += double(A.data[i]) * B.data[i];
    Matrix out(1, 1);
    out.data[0] = static_cast<float>(acc);
    bool ng = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, a, b, v] {
            float g = nodes_[v.id].grad.data[0];
            const Matrix& A2 = val(a);
            const Matrix& B2 = val(b);
            if (nodes_[a.id].needs_grad) {
                Matrix& ga = gbuf(a.id);
                for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g * B2.data[i];
            }
            if (nodes_[b.id].needs_grad) {
                Matrix& gb = gbuf(b.id);
                for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += g * A2.data[i];
            }
        };
    }
    return v;
}

Var Tape::softmax_nll(Var scores, int gold) {
    const Matrix& S = val(scores);
    check(S.rows == 1 && S.cols >= 1, "softmax_nll: scores must be 1 x C");
    check(0 <= gold && gold < S.cols, "softmax_nll: gold index out of range");
    double m = -1e300;
    for (int j = 0; j < S.cols; ++j) {
        if (!std::isfinite(S.data[j])) throw NumericError("softmax_nll: non-finite score");
        m = std::max(m, double(S.data[j]));
    }
    double sum = 0.0;
    for (int j = 0; j < S.cols; ++j) sum += std::exp(double(S.data[j]) - m);
    double loss = (m + std::log(sum)) - double(S.data[gold]);
    Matrix out(1, 1);
    out.data[0] = static_cast<float>(loss);
    bool ng = nodes_[scores.id].needs_grad;
    Var v = push(std::move(out), ng, nullptr);
    if (ng && track_) {
        nodes_[v.id].back = [this, scores, v, gold, m, sum] {
            float g = nodes_[v.id].grad.data[0];
            const Matrix& S2 = val(scores);
            Matrix& gs = gbuf(scores.id);
            for (int j = 0; j < S2.cols; ++j) {
                double p = std::exp(double(S2.data[j]) - m) / sum;
                gs.data[j] += static_cast<float>(g * (p - (j == gold ? 1.0 : 0.0)));
            }
        };
    }
    return v;
}

double grad_check(const ScalarFn& f, const std::vector<float>& point, double epsilon) {
    if (!(epsilon >= 1e-5 && epsilon <= 1e-3))
        throw InvalidInputError("grad_check: epsilon outside [1e-5, 1e-3]");
    ScalarEval base = f(point);
    if (!std::isfinite(base.value)) throw NumericError("grad_check: non-finite value at point");
    if (base.gradient.size() != point.size())
        throw InvalidInputError("grad_check: gradient size != point size");
    double worst = 0.0;
    for (size_t i = 0; i < point.size(); ++i) {
        std::vector<float> xp = point, xm = point;
        xp[i] = static_cast<float>(double(point[i]) + epsilon);
        xm[i] = static_cast<float>(double(point[i]) - epsilon);
        double h = double(xp[i]) - double(xm[i]);  // the step actually realized in float
        double fp = f(xp).value;
        double fm = f(xm).value;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("grad_check: non-finite value at perturbed point");
        double fd = (fp - fm) / h;
        double gt = base.gradient[i];
        double rel = std::abs(gt - fd) / std::max({1.0, std::abs(gt), std::abs(fd)});
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace cobert
