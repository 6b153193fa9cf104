#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "orthofield/exactsys.hpp"
#include "orthofield/lattice.hpp"

namespace orthofield {

// ---------------------------------------------------------------------------
// Parametric stationary random-field models over Z^d driven by i.i.d.
// innovations, with seeded window sampling.  Sampling is a pure function of
// (spec, window, seed): every innovation variate is produced by a pinned
// counter-based generator keyed by the absolute site coordinates, so sampling
// a larger window and restricting it equals sampling the sub-window directly.
// ---------------------------------------------------------------------------

enum class InnovationLaw { StandardNormal, Rademacher, CenteredUniform };

// Centered i.i.d. innovations with standard deviation sd.
//   StandardNormal : N(0, sd^2)
//   Rademacher     : +-sd with equal probability
//   CenteredUniform: uniform on [-sqrt(3) sd, sqrt(3) sd]
struct InnovationSpec {
    InnovationLaw law = InnovationLaw::StandardNormal;
    double sd = 1.0;
};

using CoeffMap = std::map<MultiIndex, double, MultiIndexLess>;

// Finite-support linear field  f = sum_i a_i eps_{-i};  the value sampled at
// site k is  X_k = sum_i a_i eps_{k-i}.
struct LinearFieldSpec {
    int d = 1;
    CoeffMap coeffs;  // i -> a_i, finite support
    InnovationSpec innovation;
    int64_t truncation_radius = -1;  // >= 0 when built by product_decay_field
};

// Bounded modulation applied to the strictly-past innovation at -(1,...,1).
enum class Modulation { None, Sign };  // v(x) = 1,  or  sign(x) with sign(0) := 1

// Martingale-difference field  m_k = eps_k * v(eps_{k-(1,...,1)}):
// E[m_k | sigma(all sites except k)] = 0, which makes the field an
// orthomartingale difference for the product filtration.
struct OrthoMDSpec {
    int d = 1;
    InnovationSpec innovation;
    Modulation modulation = Modulation::None;
};

// One second-order term  c * eps_{k-i} * eps_{k-j},  i != j.
struct VolterraPair {
    MultiIndex i, j;
    double c = 0.0;
};

// Finite-support second-order field (simulation only; no symbolic projections).
struct VolterraFieldSpec {
    int d = 1;
    std::vector<VolterraPair> pairs;
    InnovationSpec innovation;
};

using FieldSpec = std::variant<LinearFieldSpec, OrthoMDSpec, VolterraFieldSpec>;

enum class FieldErrorKind {
    BadSpec,
    WindowTooLarge,
    MembershipFailed,  // field lies outside the required direction-component space
    DegenerateScale,   // asymptotic scale sigma vanishes (coboundary-type field)
};

struct FieldError : std::runtime_error {
    FieldErrorKind kind;
    FieldError(FieldErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// A sampled window of field values, bit-exactly determined by (spec, window, seed).
struct Realization {
    Box window;
    std::vector<double> values;  // iterate_box order over window
    uint64_t seed = 0;

    explicit Realization(const Box& w) : window(w) {}
    double at(const MultiIndex& k) const { return values[static_cast<size_t>(box_offset(window, k))]; }
};

// --- pinned counter-based generator -----------------------------------------
// mix64 is the SplitMix64 finalizer (a fixed 64-bit permutation).  Keys are
// built by folding the seed and the site coordinates through it; per-site
// variates come from derived lanes of the key.  These functions define the
// reproducibility contract and must not change.
uint64_t mix64(uint64_t z);
uint64_t site_key(uint64_t seed, const MultiIndex& site);
// Independent replication streams: rep r uses derive_seed(seed, r).
uint64_t derive_seed(uint64_t seed, uint64_t stream);
// The innovation variate at one lattice site.
double innovation_at(const InnovationSpec& spec, uint64_t seed, const MultiIndex& site);

int field_dim(const FieldSpec& spec);
// Throws FieldError(BadSpec) on invalid dimension, non-positive sd,
// mismatched coefficient indices, or diagonal Volterra pairs.
void validate(const FieldSpec& spec);

// Smallest box containing the coefficient support (BadSpec if empty).
Box support_box(const LinearFieldSpec& spec);

// The innovation sites needed to evaluate the field on `window`.
Box sample_pad(const FieldSpec& spec, const Box& window);

// Evaluates the field over the window.  Guard: the padded innovation box may
// hold at most 10^8 sites (WindowTooLarge beyond that).
Realization sample_window(const FieldSpec& spec, const Box& window, uint64_t seed);

// Product-form decaying coefficients a_i = scale * prod_q ratio^{i_q} over
// i >= 0, truncated where |a_i| < 1e-15; records the truncation radius.
LinearFieldSpec product_decay_field(int d, double ratio, double scale, const InnovationSpec& innovation);

// L2 norms under the i.i.d. innovation measure.
double field_l2_norm(const LinearFieldSpec& spec);  // sd * sqrt(sum a_i^2)
double md_l2_norm(const OrthoMDSpec& spec);         // |v| = 1 for both modulations -> sd

// --- exact embedding ---------------------------------------------------------
// Encodes a Rademacher-driven linear field on the finite product space of
// +-1 innovations over the torus window [-radius, radius]^d: atoms are bit
// patterns, the shifts permute bit positions, and the base partition reads
// the sites in [-radius, 0]^d.  Every symbolic projection formula is
// cross-validated against this system.
struct ExactEmbedding {
    FiniteSystem sys;
    FunctionVec f;  // embedded field values per atom
    int radius = 0;
    Box sites;  // [-radius, radius]^d, iterate_box order = bit positions

    ExactEmbedding(FiniteSystem s, Box site_box) : sys(std::move(s)), sites(site_box) {}

    int site_bit(const MultiIndex& s) const;         // bit position of the (wrapped) site
    double omega(int atom, const MultiIndex& s) const;  // the +-1 innovation sign at a site
};

// Guard: (2 radius + 1)^d <= 20 bit sites (atom count <= 2^20), else TooLarge.
// Requires Rademacher innovations and coefficient support within the radius.
ExactEmbedding exact_embed(const LinearFieldSpec& spec, int radius);

// Embeds an arbitrary coefficient map on an existing embedding:
// sum_i a_i * (sd * omega_{-i}).
FunctionVec embed_field(const ExactEmbedding& emb, const CoeffMap& coeffs, double sd);

}  // namespace orthofield
