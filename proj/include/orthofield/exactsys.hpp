#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orthofield/lattice.hpp"

namespace orthofield {

// All exact-engine failures carry a machine-checkable kind.
enum class SystemErrorKind {
    DimensionMismatch,
    BadWeights,
    NonCommuting,
    NotMeasurePreserving,
    FiltrationNotIncreasing,
    Unstabilized,
    NotInDomain,
    CertificationFailed,
    TooLarge,
};

struct SystemError : std::runtime_error {
    SystemErrorKind kind;
    SystemError(SystemErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

using FunctionVec = std::vector<double>;
using Partition = std::vector<int>;  // compact labels 0..cells-1, one per atom

// Either a finitely indexed sigma-algebra F_j or a limit sigma-algebra F_{inf*1_J}.
struct SigmaSpec {
    enum class Kind { Finite, Limit } kind;
    MultiIndex j;    // Finite
    DirectionSet J;  // Limit

    static SigmaSpec finite(const MultiIndex& j) { return {Kind::Finite, j, DirectionSet{j.d, 0}}; }
    static SigmaSpec limit(const DirectionSet& J) { return {Kind::Limit, MultiIndex(J.d), J}; }
};

// Finite measure-preserving Z^d-action with a designated base partition.
// Immutable after build_system; caches are derived data only.
class FiniteSystem {
  public:
    int d = 1;
    int n = 0;                            // atom count
    std::vector<double> weights;          // positive, sum 1
    std::vector<std::vector<int>> perms;  // perms[q][a] = T_q(a)
    Partition base;                       // F_0

    bool filtration_increasing = false;  // outcome of the coarser-than-pullback check
    std::string filtration_note;

    int base_cells = 0;

    // U^i f = f o T^i
    FunctionVec shift(const MultiIndex& i, const FunctionVec& f) const;
    std::vector<int> power_map(const MultiIndex& i) const;  // a -> T^i(a)

    const Partition& partition(const SigmaSpec& s) const;

    double mean(const FunctionVec& f) const;
    double inner(const FunctionVec& f, const FunctionVec& g) const;
    double norm(const FunctionVec& f) const;

  private:
    friend FiniteSystem build_system(int, const std::vector<double>&, const std::vector<std::vector<int>>&,
                                     const Partition&, bool);
    mutable std::map<MultiIndex, Partition, MultiIndexLess> finite_cache_;
    mutable std::map<unsigned, Partition> limit_cache_;
    mutable std::map<std::pair<int, int64_t>, std::vector<int>> axis_power_cache_;

    const std::vector<int>& axis_power(int q, int64_t k) const;
    Partition finite_partition(const MultiIndex& j) const;
    Partition limit_partition(const DirectionSet& J) const;
};

// Validates and constructs. Throws SystemError on violated invariants.
// The coarser-than-pullback filtration condition is recorded on the system; it
// is a hard error only when require_increasing is set (on a finite invertible
// system the condition forces base-partition invariance, which the embedding
// oracles cannot satisfy).
FiniteSystem build_system(int d, const std::vector<double>& weights, const std::vector<std::vector<int>>& perms,
                          const Partition& base, bool require_increasing = false);

// conditional expectation onto an arbitrary partition (exact weighted cell averages)
FunctionVec cond_exp_partition(const FiniteSystem& sys, const Partition& p, const FunctionVec& f);
FunctionVec cond_exp(const FiniteSystem& sys, const SigmaSpec& s, const FunctionVec& f);

struct CommutCheck {
    bool pass = true;
    double worst = 0.0;  // max |E[E[Y|F_l]|F_k] - E[Y|F_{k^l}]| over the grid and spanning set
    MultiIndex k, l;
    int atom = -1;  // indicator achieving the worst violation
};

// Verifies E[E[Y|F_l]|F_k] = E[Y|F_{k^l}] over all atom indicators and all
// k,l in the box [lo,hi]^2.
CommutCheck check_completely_commuting(const FiniteSystem& sys, int64_t lo = -2, int64_t hi = 2,
                                       double tol = 1e-12);

// Projection operator P_{d,E}^i applied to f.
FunctionVec apply_PE(const FiniteSystem& sys, const DirectionSet& E, const MultiIndex& i, const FunctionVec& f);

struct MemberReport {
    bool member = true;
    double mean_violation = 0.0;
    double measurability_violation = 0.0;
    double projection_violation = 0.0;  // worst over proper subsets
    std::string worst;                  // description of the worst constraint
};

// Membership in H_{d,E} (centered + measurability + vanishing projections).
MemberReport member_HE(const FiniteSystem& sys, const DirectionSet& E, const FunctionVec& f, double tol = 1e-12);

// w-orthonormal basis of the certified subspace H_{d,E} (columns satisfy V^T diag(w) V = I)
Eigen::MatrixXd he_basis(const FiniteSystem& sys, const DirectionSet& E);

// w-orthonormal basis of the certificate subspace for a decomposition part indexed by J.
// For J != {} this equals he_basis(sys, J). For J = {} the part must additionally be an
// orthomartingale difference, i.e. E[m | F_{-e_q}] = 0 for every direction q, so those
// conditional expectations are projected out as extra constraints.
Eigen::MatrixXd part_basis(const FiniteSystem& sys, const DirectionSet& J);

struct CoboundaryResult {
    FunctionVec h;
    double residual = 0.0;         // ||prod_q (I - P_E^{e_q}) h - F||_w
    double input_violation = 0.0;  // worst H_E-membership violation of F
};

// Minimal-norm least-squares solution of prod_q (I - P_E^{e_q}) h = F over h in H_E.
CoboundaryResult coboundary_solve(const FiniteSystem& sys, const DirectionSet& E, const FunctionVec& F);

// Decomposes prod_q (I - P_E^{i_q e_q}) h, h in H_E, into sum_J prod_{q in J} (I-U_q) parts[J.mask].
// Follows the constructive operator chains (geometric shift factors, U_q^{-1}-conjugated
// conditional expectations); accumulates into parts.
void product_chain_decompose(const FiniteSystem& sys, const DirectionSet& E, const MultiIndex& steps,
                             const FunctionVec& h, std::vector<FunctionVec>& parts);

struct PartCertificate {
    double measurability_violation = 0.0;
    double projection_violation = 0.0;
    double martingale_violation = 0.0;  // J = {} only: worst ||E[m | F_{-e_q}]||_inf over q
};

struct DecompositionParts {
    int d = 1;
    std::vector<FunctionVec> parts;             // indexed by direction-set mask; size 2^d
    std::vector<double> coboundary_residual;    // per E mask
    std::vector<PartCertificate> certificates;  // per J mask, J != full
    double residual = 0.0;                      // ||f - reconstruction||_w
    bool certified = false;                     // all certificates within tol
    bool decomposable = false;                  // residual <= accept_tol
};

struct DecomposeOptions {
    double accept_tol = 1e-9;
    double cert_tol = 1e-12;
    bool polish = true;  // project parts onto certified subspaces and redistribute the defect
};

DecompositionParts omc_decompose(const FiniteSystem& sys, const FunctionVec& f, const DecomposeOptions& opts = {});

FunctionVec reconstruct(const FiniteSystem& sys, const DecompositionParts& parts);

// Fills dec.certificates (measurability / vanishing subset projections; for the
// constant-direction part also the orthomartingale-difference check) and sets
// dec.certified. Requires dec.parts and dec.certificates sized 2^d.
void certify_parts(const FiniteSystem& sys, DecompositionParts& dec, double cert_tol);

struct GrowthReport {
    std::vector<double> sup_norm;                      // per E mask: sup_{n <= nmax} ||sum_{0<=i<=n} P_E^i f||
    std::vector<std::array<double, kMaxDim>> axis_exponent;  // per E mask: doubling exponents per axis
    double growth_exponent = 0.0;                      // max over E and axes
    bool bounded = false;
    DecompositionParts decomposition;
    bool consistent = false;  // bounded <=> decomposable
};

// Partial-sum growth diagnostics + constructive decomposition, cross-checked:
// the normalized sums stay bounded exactly when the function decomposes.
GrowthReport growth_diagnostics(const FiniteSystem& sys, const FunctionVec& f, int64_t nmax = 64,
                                const DecomposeOptions& opts = {});

}  // namespace orthofield
