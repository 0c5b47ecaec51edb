#pragma once
// Dense row-major float32 matrix plus the token validity mask. This is the
// only numeric container in the project; reductions over it accumulate in
// double where that is cheap.

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace cobert {

// Stand-in for -inf wherever a masked position enters a softmax or a max.
// Masked slots are *replaced* by this constant (their stored content is never
// read), so scores are bit-identical under arbitrary padding garbage. The
// same constant is used by the encoder's self-attention and the matcher.
inline constexpr float kMaskedScore = -1e9f;

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;  // row-major, size rows*cols

    Matrix() = default;
    Matrix(int r, int c, float fill = 0.0f)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

    float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    const float* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
    float* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;

    static Matrix from_rows(std::initializer_list<std::initializer_list<float>> rs);
};

struct Mask {
    std::vector<uint8_t> valid;  // 1 = real token, 0 = padding

    Mask() = default;
    explicit Mask(std::vector<uint8_t> v) : valid(std::move(v)) {}

    int size() const { return static_cast<int>(valid.size()); }
    bool is_valid(int i) const { return valid[static_cast<size_t>(i)] != 0; }
    int valid_count() const;
    bool any() const { return valid_count() > 0; }

    static Mask all_valid(int n) { return Mask(std::vector<uint8_t>(static_cast<size_t>(n), 1)); }
};

}  // namespace cobert
