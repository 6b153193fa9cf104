#pragma once

#include <cstdint>
#include <vector>

#include "orthofield/exactsys.hpp"
#include "orthofield/fieldmodels.hpp"
#include "orthofield/projections.hpp"

namespace orthofield {

// Blocking operator and martingale approximation.
//
// The block average of size k is
//
//   B_k(f) = k^{-d} sum_{1 <= i <= k*1} sum_{E subset [d]}
//            prod_{q=1}^{d} (I - P_E^{i_q e_q}) P_E^0 f.
//
// Every summand splits exactly into an orthomartingale difference plus
// coboundary terms, so B_k(f) = m_k + sum_{J != {}} prod_{j in J}(I - U_j) m_{k,J}
// with m_k an orthomartingale difference for the base filtration.  As k grows,
// (m_k) is Cauchy in L^2 whenever the summability / weighted-series criteria
// hold, and its limit is the approximating orthomartingale of f.
//
// Two computation routes are provided and cross-validated in the tests:
//   * symbolic — coefficient transforms on finitely supported linear fields;
//     here m_k = (sum_j b_j) eps_0 where b are the coefficients of B_k(f).
//     A single-site multiple of eps_0 is an orthomartingale difference by
//     the independence of the innovations, so no numeric certificate is
//     required on this route.
//   * exact — linear algebra on a finite dynamical system, assembling m_k and
//     the coboundary parts through the constructive operator chains
//     (geometric shift factors and U_q^{-1}-conjugated conditional
//     expectations); every part carries a numeric certificate.

// B_k(f) for a finitely supported linear field, by composing the coefficient
// transforms of the projection operators.  Coefficients with magnitude below
// 1e-15 are dropped.  Throws FieldError(BadSpec) if k < 1 or the spec is
// invalid.
LinearFieldSpec blocking(const LinearFieldSpec& f, int64_t k);

// B_k(f) on a finite system, by exact operator composition.  Requires f
// centered (|mean| <= 1e-9); throws SystemError(NotInDomain) otherwise or if
// k < 1, DimensionMismatch on a size mismatch.
FunctionVec blocking(const FiniteSystem& sys, const FunctionVec& f, int64_t k);

struct BlockedLinear {
    int64_t k = 1;
    LinearFieldSpec result;      // B_k(f)
    LinearFieldSpec martingale;  // m_k = coeff * eps_0
    double coeff = 0.0;          // sum of the coefficients of B_k(f)
};

struct BlockedExact {
    int64_t k = 1;
    FunctionVec result;      // B_k(f)
    FunctionVec martingale;  // m_k, the constant-direction part
    // Full decomposition of B_k(f): parts, certificates, residual
    // ||B_k(f) - reconstruction||_w, certified flag.
    DecompositionParts decomposition;
};

// Blocking plus martingale extraction on the symbolic route.
BlockedLinear martingale_part(const LinearFieldSpec& f, int64_t k);

// Blocking plus constructive decomposition on a finite system.  Each part is
// certified (measurability, vanishing subset projections, and for m_k the
// orthomartingale-difference identities E[m_k | F_{-e_q}] = 0).  Throws
// SystemError(CertificationFailed) if the m_k certificate exceeds
// opts.cert_tol.
BlockedExact martingale_part(const FiniteSystem& sys, const FunctionVec& f, int64_t k,
                             const DecomposeOptions& opts = {});

struct CauchyTable {
    std::vector<int64_t> k;                 // block sizes, ascending
    std::vector<double> coeff;              // martingale coefficient per k
    std::vector<std::vector<double>> dist;  // dist[r][c] = ||m_{k_r} - m_{k_c}||_{L^2}
};

// Pairwise L^2 distances of the martingale parts along k_list (sorted
// ascending, all >= 1; throws FieldError(BadSpec) otherwise).  For finitely
// supported fields the distances decay to 0 along doubling k, witnessing the
// Cauchy property of (m_k).
CauchyTable cauchy_diagnostics(const LinearFieldSpec& f, const std::vector<int64_t>& k_list);

}  // namespace orthofield
