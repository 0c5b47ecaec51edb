#pragma once
// Reverse-mode autodiff over Matrix. A Tape records one forward pass; the
// backward pass walks the recorded nodes exactly once in reverse creation
// order (creation order is topological because ops only consume earlier
// vars). One tape serves one forward/backward pass and is never shared
// across threads.
//
// Masking convention: positions flagged invalid are replaced by kMaskedScore
// before softmax/max; their stored contents are never read, so downstream
// values are bit-identical under arbitrary padding garbage.

#include <functional>
#include <utility>
#include <vector>

#include "cobert/errors.hpp"
#include "cobert/matrix.hpp"

namespace cobert {

struct Var {
    int id = -1;
    bool ok() const { return id >= 0; }
};

class Tape {
public:
    enum class Grad { kTrack, kNone };

    explicit Tape(Grad mode = Grad::kTrack) : track_(mode == Grad::kTrack) {}

    bool tracking() const { return track_; }
    size_t size() const { return nodes_.size(); }

    // Leaves -----------------------------------------------------------
    Var constant(Matrix v);                 // gradient never tracked
    Var leaf(Matrix v);                     // owned input with gradient
    Var param(const Matrix& external, int registry_id);  // external storage
    Var zeros(int rows, int cols) { return constant(Matrix(rows, cols)); }

    const Matrix& val(Var v) const { return *nodes_[v.id].value; }
    // Gradient of v after backward(); empty matrix if no gradient reached it.
    const Matrix& grad(Var v) const;

    // Registered parameter leaves, in registration order.
    const std::vector<std::pair<int, Var>>& params() const { return params_; }

    // Ops ----------------------------------------------------------------
    Var add(Var a, Var b);
    Var scale(Var a, float s);
    Var add_row(Var a, Var bias);            // bias is 1 x cols
    Var matmul(Var a, Var b);                // (m x k)(k x n)
    Var matmul_nt(Var a, Var b);             // (m x k)(n x k)^T -> m x n
    Var transpose(Var a);
    Var slice_cols(Var a, int c0, int c1);   // half-open column range
    Var concat_cols(const std::vector<Var>& vs);
    Var rows_lookup(Var table, std::vector<int> ids);
    Var gelu(Var a);
    Var layer_norm(Var a, Var gain, Var bias, float eps = 1e-5f);
    Var masked_softmax(Var scores, const Mask& col_mask);
    Var masked_max_pool(Var a, const Mask& row_mask);   // 1 x cols
    Var mean_pool_rows(Var a, const Mask& row_mask);    // 1 x cols
    Var sum_mul(Var a, Var b);               // sum(a .* b) -> 1 x 1
    Var softmax_nll(Var scores, int gold);   // -log softmax(scores)[gold]

    // Seeds d(out)=1 and propagates. out must be 1x1.
    void backward(Var out);

private:
    struct Node {
        Matrix owned;
        const Matrix* value = nullptr;  // points at owned or external storage
        Matrix grad;                    // empty until first accumulation
        std::function<void()> back;     // null for leaves / untracked
        bool needs_grad = false;
    };

    Var push(Matrix value, bool needs_grad, std::function<void()> back);
    Matrix& gbuf(int id);               // grad buffer, allocated on demand
    bool touched(int id) const { return !nodes_[id].grad.data.empty(); }

    std::vector<Node> nodes_;
    std::vector<std::pair<int, Var>> params_;
    bool track_;
};

// One evaluation of a scalar-valued function: forward value plus the tape
// gradient at the same point. Used by grad_check.
struct ScalarEval {
    double value = 0.0;
    std::vector<float> gradient;
};
using ScalarFn = std::function<ScalarEval(const std::vector<float>&)>;

// Compares the tape gradient of f at `point` against central finite
// differences with step `epsilon` (valid range [1e-5, 1e-3]). Returns
// max over coordinates of |g_tape - g_fd| / max(1, |g_tape|, |g_fd|).
double grad_check(const ScalarFn& f, const std::vector<float>& point, double epsilon);

}  // namespace cobert
