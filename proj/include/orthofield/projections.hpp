#pragma once

#include <string>

#include "orthofield/fieldmodels.hpp"
#include "orthofield/lattice.hpp"

namespace orthofield {

// ---------------------------------------------------------------------------
// Closed-form action of the projection operators on finite-support linear
// fields, as coefficient transforms.  With f = sum_u a_u eps_{-u}, the
// direction-component operator at stage i >= 0 produces
//
//   g_u = a_{u + i * eps(E)}   on the region  { u_q <= -1 for q in E,
//                                               u_q >=  0 for q not in E },
//
// and zero elsewhere; eps(E) is -1 on E and +1 off E.  Every transform here
// is cross-validated against the exact finite-system operators on Rademacher
// embeddings.
// ---------------------------------------------------------------------------

// A linear field together with the description of the operators applied to it.
struct ProjectedField {
    LinearFieldSpec base;
    std::string lineage;
};

// Does u lie in the coefficient-support region of the E-component?
bool in_region(const DirectionSet& E, const MultiIndex& u);

// P_E^i as a coefficient transform (pre: i >= 0 coordinatewise).
ProjectedField linear_PE(const LinearFieldSpec& f, const DirectionSet& E, const MultiIndex& i);
ProjectedField linear_PE(const ProjectedField& f, const DirectionSet& E, const MultiIndex& i);

// The commuting-projector coefficient: the coefficient of eps_j in f, i.e. a_{-j}.
double linear_pi(const LinearFieldSpec& f, const MultiIndex& j);

// Accumulated coefficients of sum_{0 <= i <= n-1} P_E^i f (entries below
// 1e-15 in magnitude dropped).
CoeffMap sum_PE_coeffs(const LinearFieldSpec& f, const DirectionSet& E, const MultiIndex& n);

// || sum_{0 <= i <= n-1} P_E^i f ||_{L2} = sd * sqrt(sum of squared
// accumulated coefficients)  (pre: n >= 1 coordinatewise).
double sum_PE_norm(const LinearFieldSpec& f, const DirectionSet& E, const MultiIndex& n);

// Coefficient table as CSV: header "i1,...,id,value", one row per entry in
// key order, '.' decimal, LF endings.
std::string coeff_csv(const LinearFieldSpec& f);

}  // namespace orthofield
