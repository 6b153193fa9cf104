#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace orthofield {

inline constexpr int kMaxDim = 4;

// Point of the index lattice Z^d, 1 <= d <= kMaxDim. Coordinates beyond d stay zero.
struct MultiIndex {
    int d = 1;
    std::array<int64_t, kMaxDim> c{};

    MultiIndex() = default;
    explicit MultiIndex(int dim) : d(dim) {
        if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("MultiIndex: dimension out of range");
    }
    MultiIndex(int dim, std::initializer_list<int64_t> v) : MultiIndex(dim) {
        int q = 0;
        for (int64_t x : v) {
            if (q >= dim) throw std::invalid_argument("MultiIndex: too many coordinates");
            c[q++] = x;
        }
        if (q != dim) throw std::invalid_argument("MultiIndex: missing coordinates");
    }

    int64_t operator[](int q) const { return c[q]; }
    int64_t& operator[](int q) { return c[q]; }

    bool operator==(const MultiIndex& o) const { return d == o.d && c == o.c; }

    MultiIndex operator+(const MultiIndex& o) const {
        MultiIndex r(*this);
        for (int q = 0; q < d; ++q) r.c[q] += o.c[q];
        return r;
    }
    MultiIndex operator-(const MultiIndex& o) const {
        MultiIndex r(*this);
        for (int q = 0; q < d; ++q) r.c[q] -= o.c[q];
        return r;
    }
    MultiIndex operator-() const {
        MultiIndex r(*this);
        for (int q = 0; q < d; ++q) r.c[q] = -r.c[q];
        return r;
    }
    // coordinatewise product (used with sign vectors)
    MultiIndex operator*(const MultiIndex& o) const {
        MultiIndex r(*this);
        for (int q = 0; q < d; ++q) r.c[q] *= o.c[q];
        return r;
    }

    std::string str() const {
        std::string s = "(";
        for (int q = 0; q < d; ++q) s += std::to_string(c[q]) + (q + 1 < d ? "," : "");
        return s + ")";
    }
};

inline MultiIndex zeros(int d) { return MultiIndex(d); }
inline MultiIndex ones(int d) {
    MultiIndex r(d);
    for (int q = 0; q < d; ++q) r[q] = 1;
    return r;
}
inline MultiIndex scaled_ones(int d, int64_t k) {
    MultiIndex r(d);
    for (int q = 0; q < d; ++q) r[q] = k;
    return r;
}
inline MultiIndex unit(int d, int q) {
    MultiIndex r(d);
    r[q] = 1;
    return r;
}

// partial order: a <= b coordinatewise
inline bool leq(const MultiIndex& a, const MultiIndex& b) {
    for (int q = 0; q < a.d; ++q)
        if (a[q] > b[q]) return false;
    return true;
}
inline MultiIndex cmin(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex r(a);
    for (int q = 0; q < a.d; ++q) r[q] = std::min(a[q], b[q]);
    return r;
}
inline MultiIndex cmax(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex r(a);
    for (int q = 0; q < a.d; ++q) r[q] = std::max(a[q], b[q]);
    return r;
}

// strict total order for use as map key
struct MultiIndexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const {
        if (a.d != b.d) return a.d < b.d;
        for (int q = 0; q < a.d; ++q)
            if (a[q] != b[q]) return a[q] < b[q];
        return false;
    }
};

// Subset of directions {1,...,d}, stored as a bitmask over 0-based axes.
struct DirectionSet {
    int d = 1;
    unsigned mask = 0;

    DirectionSet() = default;
    DirectionSet(int dim, unsigned m) : d(dim), mask(m) {
        if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("DirectionSet: dimension out of range");
        if (m >= (1u << dim)) throw std::invalid_argument("DirectionSet: mask exceeds dimension");
    }

    bool contains(int q) const { return (mask >> q) & 1u; }
    int size() const { return __builtin_popcount(mask); }
    bool empty() const { return mask == 0; }
    bool full() const { return mask + 1u == (1u << d); }
    bool operator==(const DirectionSet& o) const { return d == o.d && mask == o.mask; }

    // proper subset test
    bool proper_subset_of(const DirectionSet& o) const {
        return mask != o.mask && (mask & ~o.mask) == 0;
    }
    bool subset_of(const DirectionSet& o) const { return (mask & ~o.mask) == 0; }

    DirectionSet complement() const { return {d, (~mask) & ((1u << d) - 1u)}; }

    std::string str() const {
        std::string s = "{";
        bool first = true;
        for (int q = 0; q < d; ++q)
            if (contains(q)) {
                if (!first) s += ",";
                s += std::to_string(q + 1);  // 1-based in reports
                first = false;
            }
        return s + "}";
    }
};

inline DirectionSet empty_set(int d) { return {d, 0u}; }
inline DirectionSet full_set(int d) { return {d, (1u << d) - 1u}; }

// all subsets of E (including empty and E itself)
inline std::vector<DirectionSet> subsets_of(const DirectionSet& E) {
    std::vector<DirectionSet> out;
    unsigned m = E.mask;
    unsigned s = 0;
    while (true) {
        out.push_back({E.d, s});
        if (s == m) break;
        s = (s - m) & m;  // next submask in increasing order of (s - m) wrap; enumerates all
    }
    return out;
}

// all subsets of {1..d}
inline std::vector<DirectionSet> all_direction_sets(int d) { return subsets_of(full_set(d)); }

// sign vector: -1 on coordinates in E, +1 elsewhere
inline MultiIndex eps_sign(const DirectionSet& E) {
    MultiIndex r(E.d);
    for (int q = 0; q < E.d; ++q) r[q] = E.contains(q) ? -1 : 1;
    return r;
}

// keep coordinates in J, zero the rest
inline MultiIndex mask_index(const MultiIndex& i, const DirectionSet& J) {
    MultiIndex r(i.d);
    for (int q = 0; q < i.d; ++q) r[q] = J.contains(q) ? i[q] : 0;
    return r;
}

// Integer box [lo, hi], lo <= hi coordinatewise.
struct Box {
    MultiIndex lo, hi;

    Box(const MultiIndex& l, const MultiIndex& h) : lo(l), hi(h) {
        if (l.d != h.d) throw std::invalid_argument("Box: dimension mismatch");
        if (!leq(l, h)) throw std::invalid_argument("Box: lo must be <= hi coordinatewise");
    }

    int dim() const { return lo.d; }
    int64_t side(int q) const { return hi[q] - lo[q] + 1; }
    int64_t volume() const {
        int64_t v = 1;
        for (int q = 0; q < dim(); ++q) v *= side(q);
        return v;
    }
    bool contains(const MultiIndex& i) const { return leq(lo, i) && leq(i, hi); }
};

// Lexicographic traversal, last coordinate fastest. This order is part of the
// serialization contract: flattened arrays are indexed by it.
inline void iterate_box(const Box& b, const std::function<void(const MultiIndex&)>& fn) {
    MultiIndex i = b.lo;
    const int d = b.dim();
    while (true) {
        fn(i);
        int q = d - 1;
        while (q >= 0) {
            if (++i[q] <= b.hi[q]) break;
            i[q] = b.lo[q];
            --q;
        }
        if (q < 0) break;
    }
}

// flat offset of i within the box traversal order
inline int64_t box_offset(const Box& b, const MultiIndex& i) {
    int64_t off = 0;
    for (int q = 0; q < b.dim(); ++q) off = off * b.side(q) + (i[q] - b.lo[q]);
    return off;
}

}  // namespace orthofield
