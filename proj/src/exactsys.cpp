#include "orthofield/exactsys.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace orthofield {

namespace {

Partition compact(const std::vector<int>& raw) {
    Partition out(raw.size());
    std::unordered_map<int, int> relabel;
    int next = 0;
    for (size_t a = 0; a < raw.size(); ++a) {
        auto [it, inserted] = relabel.try_emplace(raw[a], next);
        if (inserted) ++next;
        out[a] = it->second;
    }
    return out;
}

int cell_count(const Partition& p) {
    int m = -1;
    for (int l : p) m = std::max(m, l);
    return m + 1;
}

// join = common refinement; labels deterministic by first occurrence
Partition join(const Partition& p1, const Partition& p2) {
    std::vector<int> raw(p1.size());
    std::unordered_map<int64_t, int> relabel;
    int next = 0;
    const int64_t c2 = cell_count(p2);
    for (size_t a = 0; a < p1.size(); ++a) {
        int64_t key = int64_t(p1[a]) * c2 + p2[a];
        auto [it, inserted] = relabel.try_emplace(key, next);
        if (inserted) ++next;
        raw[a] = it->second;
    }
    return raw;
}

std::vector<int> invert(const std::vector<int>& p) {
    std::vector<int> inv(p.size());
    for (size_t a = 0; a < p.size(); ++a) inv[p[a]] = int(a);
    return inv;
}

Eigen::VectorXd to_eigen(const FunctionVec& f) {
    return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
}

FunctionVec from_eigen(const Eigen::VectorXd& v) {
    return FunctionVec(v.data(), v.data() + v.size());
}

}  // namespace

const std::vector<int>& FiniteSystem::axis_power(int q, int64_t k) const {
    auto key = std::make_pair(q, k);
    auto it = axis_power_cache_.find(key);
    if (it != axis_power_cache_.end()) return it->second;

    std::vector<int> map(n);
    if (k == 0) {
        for (int a = 0; a < n; ++a) map[a] = a;
    } else {
        const std::vector<int>& step = (k > 0) ? axis_power(q, 1) : axis_power(q, -1);
        const std::vector<int>& prev = axis_power(q, k > 0 ? k - 1 : k + 1);
        for (int a = 0; a < n; ++a) map[a] = step[prev[a]];
    }
    return axis_power_cache_.emplace(key, std::move(map)).first->second;
}

std::vector<int> FiniteSystem::power_map(const MultiIndex& i) const {
    std::vector<int> out(n);
    for (int a = 0; a < n; ++a) out[a] = a;
    for (int q = 0; q < d; ++q) {
        if (i[q] == 0) continue;
        const std::vector<int>& pw = axis_power(q, i[q]);
        for (int a = 0; a < n; ++a) out[a] = pw[out[a]];
    }
    return out;
}

FunctionVec FiniteSystem::shift(const MultiIndex& i, const FunctionVec& f) const {
    if (int(f.size()) != n) throw SystemError(SystemErrorKind::DimensionMismatch, "shift: function size mismatch");
    std::vector<int> pm = power_map(i);
    FunctionVec out(n);
    for (int a = 0; a < n; ++a) out[a] = f[pm[a]];
    return out;
}

Partition FiniteSystem::finite_partition(const MultiIndex& j) const {
    std::vector<int> pm = power_map(j);
    std::vector<int> raw(n);
    for (int a = 0; a < n; ++a) raw[a] = base[pm[a]];
    return compact(raw);
}

Partition FiniteSystem::limit_partition(const DirectionSet& J) const {
    // join of F_{m*1_J} along powers of g = T^{1_J}; one-step stabilization is
    // globally valid along powers of a single map.
    Partition cur = compact(base);
    std::vector<int> g(n);
    {
        MultiIndex oneJ = mask_index(ones(d), J);
        g = power_map(oneJ);
    }
    std::vector<int> gm(n);
    for (int a = 0; a < n; ++a) gm[a] = a;
    const int cap = 4 * n;
    for (int m = 1; m <= cap; ++m) {
        for (int a = 0; a < n; ++a) gm[a] = g[gm[a]];
        std::vector<int> lab(n);
        for (int a = 0; a < n; ++a) lab[a] = base[gm[a]];
        Partition joined = join(cur, lab);
        if (cell_count(joined) == cell_count(cur)) return cur;
        cur = std::move(joined);
    }
    throw SystemError(SystemErrorKind::Unstabilized, "limit sigma-algebra join did not stabilize within 4N sweeps");
}

const Partition& FiniteSystem::partition(const SigmaSpec& s) const {
    if (s.kind == SigmaSpec::Kind::Finite) {
        if (s.j.d != d) throw SystemError(SystemErrorKind::DimensionMismatch, "SigmaSpec dimension mismatch");
        auto it = finite_cache_.find(s.j);
        if (it == finite_cache_.end()) it = finite_cache_.emplace(s.j, finite_partition(s.j)).first;
        return it->second;
    }
    if (s.J.d != d) throw SystemError(SystemErrorKind::DimensionMismatch, "SigmaSpec dimension mismatch");
    auto it = limit_cache_.find(s.J.mask);
    if (it == limit_cache_.end()) it = limit_cache_.emplace(s.J.mask, limit_partition(s.J)).first;
    return it->second;
}

double FiniteSystem::mean(const FunctionVec& f) const {
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += weights[a] * f[a];
    return s;
}

double FiniteSystem::inner(const FunctionVec& f, const FunctionVec& g) const {
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += weights[a] * f[a] * g[a];
    return s;
}

double FiniteSystem::norm(const FunctionVec& f) const { return std::sqrt(std::max(0.0, inner(f, f))); }

FiniteSystem build_system(int d, const std::vector<double>& weights, const std::vector<std::vector<int>>& perms,
                          const Partition& base, bool require_increasing) {
    if (d < 1 || d > kMaxDim) throw SystemError(SystemErrorKind::DimensionMismatch, "dimension out of range");
    const int n = int(weights.size());
    if (n < 1) throw SystemError(SystemErrorKind::DimensionMismatch, "empty system");
    if (int(perms.size()) != d) throw SystemError(SystemErrorKind::DimensionMismatch, "need one permutation per axis");
    if (int(base.size()) != n) throw SystemError(SystemErrorKind::DimensionMismatch, "base partition size mismatch");

    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw SystemError(SystemErrorKind::BadWeights, "weights must be strictly positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw SystemError(SystemErrorKind::BadWeights, "weights must sum to 1 within 1e-12");

    for (int q = 0; q < d; ++q) {
        if (int(perms[q].size()) != n) throw SystemError(SystemErrorKind::DimensionMismatch, "permutation size mismatch");
        std::vector<char> seen(n, 0);
        for (int a = 0; a < n; ++a) {
            int b = perms[q][a];
            if (b < 0 || b >= n || seen[b]) throw SystemError(SystemErrorKind::NotMeasurePreserving, "not a permutation");
            seen[b] = 1;
        }
        for (int a = 0; a < n; ++a)
            if (std::abs(weights[perms[q][a]] - weights[a]) > 1e-15)
                throw SystemError(SystemErrorKind::NotMeasurePreserving,
                                  "axis " + std::to_string(q + 1) + " does not preserve the weights");
    }
    for (int q = 0; q < d; ++q)
        for (int r = q + 1; r < d; ++r)
            for (int a = 0; a < n; ++a)
                if (perms[q][perms[r][a]] != perms[r][perms[q][a]])
                    throw SystemError(SystemErrorKind::NonCommuting, "axes " + std::to_string(q + 1) + " and " +
                                                                         std::to_string(r + 1) + " do not commute");

    FiniteSystem sys;
    sys.d = d;
    sys.n = n;
    sys.weights = weights;
    sys.perms = perms;
    sys.base = compact(base);
    sys.base_cells = cell_count(sys.base);
    for (int q = 0; q < d; ++q) sys.axis_power_cache_.emplace(std::make_pair(q, int64_t(-1)), invert(perms[q]));
    for (int q = 0; q < d; ++q) sys.axis_power_cache_.emplace(std::make_pair(q, int64_t(1)), perms[q]);

    // coarser-than-pullback check: label0(T_q a) = label0(T_q b) must imply label0(a) = label0(b)
    sys.filtration_increasing = true;
    for (int q = 0; q < d && sys.filtration_increasing; ++q) {
        std::unordered_map<int, int> rep;
        for (int a = 0; a < n; ++a) {
            int pb = sys.base[perms[q][a]];
            auto [it, inserted] = rep.try_emplace(pb, sys.base[a]);
            if (!inserted && it->second != sys.base[a]) {
                sys.filtration_increasing = false;
                sys.filtration_note = "axis " + std::to_string(q + 1) + ": pullback cell " + std::to_string(pb) +
                                      " straddles base cells " + std::to_string(it->second) + " and " +
                                      std::to_string(sys.base[a]);
                break;
            }
        }
    }
    if (!sys.filtration_increasing && require_increasing)
        throw SystemError(SystemErrorKind::FiltrationNotIncreasing, sys.filtration_note);

    return sys;
}

FunctionVec cond_exp_partition(const FiniteSystem& sys, const Partition& p, const FunctionVec& f) {
    if (int(f.size()) != sys.n || int(p.size()) != sys.n)
        throw SystemError(SystemErrorKind::DimensionMismatch, "cond_exp: size mismatch");
    const int cells = cell_count(p);
    std::vector<double> wsum(cells, 0.0), fsum(cells, 0.0);
    for (int a = 0; a < sys.n; ++a) {
        wsum[p[a]] += sys.weights[a];
        fsum[p[a]] += sys.weights[a] * f[a];
    }
    FunctionVec out(sys.n);
    for (int a = 0; a < sys.n; ++a) out[a] = fsum[p[a]] / wsum[p[a]];
    return out;
}

FunctionVec cond_exp(const FiniteSystem& sys, const SigmaSpec& s, const FunctionVec& f) {
    return cond_exp_partition(sys, sys.partition(s), f);
}

CommutCheck check_completely_commuting(const FiniteSystem& sys, int64_t lo, int64_t hi, double tol) {
    CommutCheck rep;
    rep.k = MultiIndex(sys.d);
    rep.l = MultiIndex(sys.d);
    Box grid(scaled_ones(sys.d, lo), scaled_ones(sys.d, hi));

    std::vector<MultiIndex> pts;
    iterate_box(grid, [&](const MultiIndex& i) { pts.push_back(i); });

    for (const MultiIndex& k : pts) {
        const Partition& pk = sys.partition(SigmaSpec::finite(k));
        const int ck = cell_count(pk);
        std::vector<double> Wk(ck, 0.0);
        for (int a = 0; a < sys.n; ++a) Wk[pk[a]] += sys.weights[a];
        for (const MultiIndex& l : pts) {
            const Partition& pl = sys.partition(SigmaSpec::finite(l));
            const Partition& pm = sys.partition(SigmaSpec::finite(cmin(k, l)));
            const int cl = cell_count(pl);
            const int cm = cell_count(pm);
            std::vector<double> Wl(cl, 0.0), Wm(cm, 0.0);
            for (int a = 0; a < sys.n; ++a) {
                Wl[pl[a]] += sys.weights[a];
                Wm[pm[a]] += sys.weights[a];
            }
            // intersection weights of k-cells with l-cells
            std::vector<double> M(size_t(ck) * cl, 0.0);
            for (int a = 0; a < sys.n; ++a) M[size_t(pk[a]) * cl + pl[a]] += sys.weights[a];

            // E[E[1_a|F_l]|F_k](x) = w_a * M[kx][la] / (Wl[la] Wk[kx]);  E[1_a|F_m](x) = w_a 1{mx=ma}/Wm[ma].
            // The value depends on a only through (la, ma, w_a) and on x only through
            // (kx, mx), so compare distinct group pairs instead of atom pairs.
            struct GroupA {
                int lcell, mcell, atom;
                double wmax;
            };
            struct GroupX {
                int kcell, mcell;
            };
            std::vector<GroupA> ga;
            std::vector<GroupX> gx;
            {
                std::unordered_map<int64_t, int> ia, ix;
                for (int a = 0; a < sys.n; ++a) {
                    int64_t key = int64_t(pl[a]) * cm + pm[a];
                    auto [it, inserted] = ia.try_emplace(key, int(ga.size()));
                    if (inserted) {
                        ga.push_back({pl[a], pm[a], a, sys.weights[a]});
                    } else if (sys.weights[a] > ga[it->second].wmax) {
                        ga[it->second].wmax = sys.weights[a];
                        ga[it->second].atom = a;
                    }
                }
                for (int x = 0; x < sys.n; ++x) {
                    int64_t key = int64_t(pk[x]) * cm + pm[x];
                    if (ix.try_emplace(key, int(gx.size())).second) gx.push_back({pk[x], pm[x]});
                }
            }
            for (const GroupA& A : ga) {
                const double base_lhs = 1.0 / (Wl[A.lcell]);
                for (const GroupX& X : gx) {
                    double lhs = A.wmax * base_lhs * M[size_t(X.kcell) * cl + A.lcell] / Wk[X.kcell];
                    double rhs = (X.mcell == A.mcell) ? A.wmax / Wm[A.mcell] : 0.0;
                    double v = std::abs(lhs - rhs);
                    if (v > rep.worst) {
                        rep.worst = v;
                        rep.k = k;
                        rep.l = l;
                        rep.atom = A.atom;
                    }
                }
            }
        }
    }
    rep.pass = rep.worst <= tol;
    return rep;
}

FunctionVec apply_PE(const FiniteSystem& sys, const DirectionSet& E, const MultiIndex& i, const FunctionVec& f) {
    if (E.d != sys.d || i.d != sys.d) throw SystemError(SystemErrorKind::DimensionMismatch, "apply_PE: dimension mismatch");
    const MultiIndex shift_idx = i * eps_sign(E);  // equals -i when E = [d]
    FunctionVec s = sys.shift(shift_idx, f);
    FunctionVec out(sys.n, 0.0);
    if (E.full()) {
        out = s;
        for (const DirectionSet& J : all_direction_sets(sys.d)) {
            if (J.full()) continue;
            double sign = ((J.size() + sys.d) % 2 == 0) ? 1.0 : -1.0;
            FunctionVec c = cond_exp(sys, SigmaSpec::limit(J), s);
            for (int a = 0; a < sys.n; ++a) out[a] += sign * c[a];
        }
    } else {
        for (const DirectionSet& J : subsets_of(E)) {
            double sign = ((J.size() + E.size()) % 2 == 0) ? 1.0 : -1.0;
            FunctionVec c = cond_exp(sys, SigmaSpec::limit(J), s);
            for (int a = 0; a < sys.n; ++a) out[a] += sign * c[a];
        }
    }
    return out;
}

MemberReport member_HE(const FiniteSystem& sys, const DirectionSet& E, const FunctionVec& f, double tol) {
    MemberReport rep;
    rep.mean_violation = std::abs(sys.mean(f));
    if (rep.mean_violation > tol) rep.worst = "nonzero mean";

    if (!E.full()) {
        FunctionVec c = cond_exp(sys, SigmaSpec::limit(E), f);
        for (int a = 0; a < sys.n; ++a)
            rep.measurability_violation = std::max(rep.measurability_violation, std::abs(f[a] - c[a]));
        if (rep.measurability_violation > tol) rep.worst = "not measurable w.r.t. limit sigma-algebra of " + E.str();
    }
    for (const DirectionSet& Ep : E.full() ? all_direction_sets(sys.d) : subsets_of(E)) {
        if (Ep == E || (E.full() && Ep.full())) continue;
        FunctionVec c = cond_exp(sys, SigmaSpec::limit(Ep), f);
        double v = 0.0;
        for (int a = 0; a < sys.n; ++a) v = std::max(v, std::abs(c[a]));
        if (v > rep.projection_violation) {
            rep.projection_violation = v;
            if (v > tol) rep.worst = "nonzero projection onto limit sigma-algebra of " + Ep.str();
        }
    }
    rep.member = rep.mean_violation <= tol && rep.measurability_violation <= tol && rep.projection_violation <= tol;
    return rep;
}

static Eigen::MatrixXd basis_with_constraints(const FiniteSystem& sys, const DirectionSet& E,
                                              const std::vector<const Partition*>& extra) {
    const int n = sys.n;
    Eigen::VectorXd sq(n);
    for (int a = 0; a < n; ++a) sq[a] = std::sqrt(sys.weights[a]);

    auto unscale = [&](Eigen::MatrixXd B) {
        for (int a = 0; a < n; ++a) B.row(a) /= sq[a];
        return B;
    };

    // Orthonormal basis of the measurable span in sqrt(w)-scaled coordinates:
    // cell indicators have disjoint supports, so normalizing by the cell
    // masses is exact. For the full direction set the span is everything.
    const bool identity_span = E.full();
    int acols = n;
    Eigen::MatrixXd QA;
    if (!identity_span) {
        const Partition& p = sys.partition(SigmaSpec::limit(E));
        const int cells = cell_count(p);
        std::vector<double> cmass(cells, 0.0);
        for (int a = 0; a < n; ++a) cmass[p[a]] += sys.weights[a];
        QA = Eigen::MatrixXd::Zero(n, cells);
        for (int a = 0; a < n; ++a) QA(a, p[a]) = sq[a] / std::sqrt(cmass[p[a]]);
        acols = cells;
    }

    // Constraint span: limit stages of the maximal proper subsets, any extra
    // partitions, plus the constant when E is empty (centering).
    std::vector<const Partition*> cons = extra;
    for (int q = 0; q < sys.d; ++q)
        if (E.contains(q)) cons.push_back(&sys.partition(SigmaSpec::limit({sys.d, E.mask & ~(1u << q)})));
    int ccols = 0;
    for (auto* p : cons) ccols += cell_count(*p);
    if (E.empty()) ccols += 1;
    if (ccols == 0) return unscale(identity_span ? Eigen::MatrixXd::Identity(n, n) : QA);

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, ccols);
    {
        int off = 0;
        for (auto* p : cons) {
            for (int a = 0; a < n; ++a) C(a, off + (*p)[a]) = sq[a];
            off += cell_count(*p);
        }
        if (E.empty())
            for (int a = 0; a < n; ++a) C(a, off) = sq[a];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svdC(C, Eigen::ComputeThinU);
    const double cthresh = svdC.singularValues()[0] * 1e-12;
    int crank = 0;
    for (int i = 0; i < svdC.singularValues().size(); ++i)
        if (svdC.singularValues()[i] > cthresh) ++crank;
    Eigen::MatrixXd Qc = svdC.matrixU().leftCols(crank);

    // The target subspace is (measurable span) intersect (constraints)^perp:
    // the null space of M = Qc^T QA. Both factors have orthonormal columns, so
    // the singular values of M are principal-angle cosines in [0, 1] and an
    // absolute cutoff cleanly separates incidence from genuine overlap.
    Eigen::MatrixXd M = identity_span ? Eigen::MatrixXd(Qc.transpose()) : Eigen::MatrixXd(Qc.transpose() * QA);
    Eigen::JacobiSVD<Eigen::MatrixXd> svdM(M, Eigen::ComputeFullV);
    const auto& sv = svdM.singularValues();
    std::vector<int> keep;
    for (int i = 0; i < acols; ++i)
        if (i >= int(sv.size()) || sv[i] <= 1e-10) keep.push_back(i);

    Eigen::MatrixXd Y(acols, int(keep.size()));
    for (int k = 0; k < int(keep.size()); ++k) Y.col(k) = svdM.matrixV().col(keep[k]);
    return unscale(identity_span ? Y : Eigen::MatrixXd(QA * Y));
}

Eigen::MatrixXd he_basis(const FiniteSystem& sys, const DirectionSet& E) {
    return basis_with_constraints(sys, E, {});
}

Eigen::MatrixXd part_basis(const FiniteSystem& sys, const DirectionSet& J) {
    if (!J.empty()) return basis_with_constraints(sys, J, {});
    // The empty-set part must be an orthomartingale difference: E[m | F_{-e_q}] = 0 for
    // every q, realized by projecting out the cell indicators of each one-step-back
    // finite partition.
    std::vector<const Partition*> extra;
    for (int q = 0; q < sys.d; ++q) {
        MultiIndex j(sys.d);
        j[q] = -1;
        extra.push_back(&sys.partition(SigmaSpec::finite(j)));
    }
    return basis_with_constraints(sys, J, extra);
}

namespace {

// prod_q (I - P_E^{e_q}) applied to x
FunctionVec coboundary_operator(const FiniteSystem& sys, const DirectionSet& E, const FunctionVec& x) {
    FunctionVec v = x;
    for (int q = 0; q < sys.d; ++q) {
        FunctionVec p = apply_PE(sys, E, unit(sys.d, q), v);
        for (int a = 0; a < sys.n; ++a) v[a] -= p[a];
    }
    return v;
}

}  // namespace

CoboundaryResult coboundary_solve(const FiniteSystem& sys, const DirectionSet& E, const FunctionVec& F) {
    CoboundaryResult res;
    MemberReport mem = member_HE(sys, E, F);
    res.input_violation =
        std::max(mem.mean_violation, std::max(mem.measurability_violation, mem.projection_violation));

    Eigen::MatrixXd V = he_basis(sys, E);
    const int r = int(V.cols());
    res.h.assign(sys.n, 0.0);
    if (r == 0) {
        res.residual = sys.norm(F);
        return res;
    }

    Eigen::VectorXd sq(sys.n);
    for (int a = 0; a < sys.n; ++a) sq[a] = std::sqrt(sys.weights[a]);

    Eigen::MatrixXd G(sys.n, r);
    for (int j = 0; j < r; ++j) {
        FunctionVec col = from_eigen(V.col(j));
        FunctionVec img = coboundary_operator(sys, E, col);
        for (int a = 0; a < sys.n; ++a) G(a, j) = sq[a] * img[a];
    }
    Eigen::VectorXd rhs(sys.n);
    for (int a = 0; a < sys.n; ++a) rhs[a] = sq[a] * F[a];

    // rank-revealing least squares; the image matrix routinely carries an exact
    // kernel plus clustered singular values, which trips the divide-and-conquer
    // SVD in this Eigen release, so use the complete orthogonal decomposition
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
    Eigen::VectorXd coef = cod.solve(rhs);  // minimal-norm least squares; coords w-orthonormal => minimal ||h||_w

    Eigen::VectorXd h = V * coef;
    res.h = from_eigen(h);
    FunctionVec img = coboundary_operator(sys, E, res.h);
    for (int a = 0; a < sys.n; ++a) img[a] -= F[a];
    res.residual = sys.norm(img);
    return res;
}

namespace {

// sum_{l=0}^{steps-1} U_q^l v
FunctionVec geom_sum(const FiniteSystem& sys, int q, int64_t steps, const FunctionVec& v) {
    FunctionVec acc = v, cur = v;
    for (int64_t l = 1; l < steps; ++l) {
        cur = sys.shift(unit(sys.d, q), cur);
        for (int a = 0; a < sys.n; ++a) acc[a] += cur[a];
    }
    return acc;
}

// R_q relative to the limit sigma-algebra of J: U_q^{-1} E[U_q x | F_{inf 1_J}]
FunctionVec r_factor(const FiniteSystem& sys, const DirectionSet& J, int q, const FunctionVec& x) {
    FunctionVec s = sys.shift(unit(sys.d, q), x);
    FunctionVec c = cond_exp(sys, SigmaSpec::limit(J), s);
    MultiIndex back(sys.d);
    back[q] = -1;
    return sys.shift(back, c);
}

}  // namespace

void product_chain_decompose(const FiniteSystem& sys, const DirectionSet& E, const MultiIndex& steps,
                             const FunctionVec& h, std::vector<FunctionVec>& parts) {
    const int d = sys.d;
    for (int q = 0; q < d; ++q)
        if (steps[q] < 1) throw SystemError(SystemErrorKind::NotInDomain, "chain steps must be >= 1");

    // X_base = prod_{q in E} [-U_q^{-i_q} Geom_q(i_q)] prod_{q not in E} Geom_q(i_q) applied to h
    FunctionVec X = h;
    for (int q = 0; q < d; ++q) {
        X = geom_sum(sys, q, steps[q], X);
        if (E.contains(q)) {
            MultiIndex back(d);
            back[q] = -steps[q];
            X = sys.shift(back, X);
            for (int a = 0; a < sys.n; ++a) X[a] = -X[a];
        }
    }

    if (E.full()) {
        for (int a = 0; a < sys.n; ++a) parts[E.mask][a] += X[a];
    }

    const int par = E.full() ? d : E.size();
    for (const DirectionSet& J : E.full() ? all_direction_sets(d) : subsets_of(E)) {
        if (E.full() && J.full()) continue;
        const double sign = ((J.size() + par) % 2 == 0) ? 1.0 : -1.0;
        FunctionVec Y(sys.n);
        {
            FunctionVec tmp(sys.n);
            for (int a = 0; a < sys.n; ++a) tmp[a] = sign * X[a];
            Y = cond_exp(sys, SigmaSpec::limit(J), tmp);
        }
        const unsigned rest = (~J.mask) & ((1u << d) - 1u);
        // split I - Q_q into coboundary and residual factors over the free axes
        unsigned kp = 0;
        while (true) {
            FunctionVec m = Y;
            for (int q = 0; q < d; ++q) {
                if (J.contains(q)) continue;
                FunctionVec r = r_factor(sys, J, q, m);
                if ((kp >> q) & 1u) {
                    m = std::move(r);
                } else {
                    for (int a = 0; a < sys.n; ++a) m[a] -= r[a];
                }
            }
            const unsigned target = J.mask | kp;
            for (int a = 0; a < sys.n; ++a) parts[target][a] += m[a];
            if (kp == rest) break;
            kp = (kp - rest) & rest;
        }
    }
}

FunctionVec reconstruct(const FiniteSystem& sys, const DecompositionParts& dec) {
    FunctionVec out(sys.n, 0.0);
    for (const DirectionSet& J : all_direction_sets(sys.d)) {
        FunctionVec v = dec.parts[J.mask];
        for (int q = 0; q < sys.d; ++q) {
            if (!J.contains(q)) continue;
            FunctionVec s = sys.shift(unit(sys.d, q), v);
            for (int a = 0; a < sys.n; ++a) v[a] -= s[a];
        }
        for (int a = 0; a < sys.n; ++a) out[a] += v[a];
    }
    return out;
}

DecompositionParts omc_decompose(const FiniteSystem& sys, const FunctionVec& f, const DecomposeOptions& opts) {
    if (int(f.size()) != sys.n) throw SystemError(SystemErrorKind::DimensionMismatch, "omc_decompose: size mismatch");
    if (std::abs(sys.mean(f)) > 1e-9)
        throw SystemError(SystemErrorKind::NotInDomain, "omc_decompose expects a centered function");

    const int d = sys.d;
    const unsigned nsets = 1u << d;
    DecompositionParts dec;
    dec.d = d;
    dec.parts.assign(nsets, FunctionVec(sys.n, 0.0));
    dec.coboundary_residual.assign(nsets, 0.0);
    dec.certificates.assign(nsets, {});

    for (const DirectionSet& E : all_direction_sets(d)) {
        FunctionVec FE = apply_PE(sys, E, MultiIndex(d), f);
        CoboundaryResult cb = coboundary_solve(sys, E, FE);
        dec.coboundary_residual[E.mask] = cb.residual;
        product_chain_decompose(sys, E, ones(d), cb.h, dec.parts);
    }

    if (opts.polish) {
        Eigen::VectorXd wv(sys.n);
        for (int a = 0; a < sys.n; ++a) wv[a] = sys.weights[a];

        // project each constrained part onto its certified subspace
        std::vector<Eigen::MatrixXd> bases(nsets);
        for (const DirectionSet& J : all_direction_sets(d)) {
            if (J.full()) continue;
            bases[J.mask] = part_basis(sys, J);
            Eigen::VectorXd x = to_eigen(dec.parts[J.mask]);
            Eigen::VectorXd proj = bases[J.mask] * (bases[J.mask].transpose() * (wv.asDiagonal() * x));
            dec.parts[J.mask] = from_eigen(proj);
        }

        // redistribute the defect by one minimal-norm least squares over the certified subspaces
        FunctionVec rec = reconstruct(sys, dec);
        Eigen::VectorXd sq = wv.cwiseSqrt();
        Eigen::VectorXd rhs(sys.n);
        for (int a = 0; a < sys.n; ++a) rhs[a] = sq[a] * (f[a] - rec[a]);

        int total_cols = sys.n;  // unconstrained full-set part
        for (const DirectionSet& J : all_direction_sets(d))
            if (!J.full()) total_cols += int(bases[J.mask].cols());

        Eigen::MatrixXd G(sys.n, total_cols);
        std::vector<std::pair<unsigned, int>> col_src;  // (set mask, basis col); basis col = -1 for canonical
        int col = 0;
        for (const DirectionSet& J : all_direction_sets(d)) {
            const int cols_J = J.full() ? sys.n : int(bases[J.mask].cols());
            for (int j = 0; j < cols_J; ++j) {
                FunctionVec v(sys.n, 0.0);
                if (J.full()) {
                    v[j] = 1.0 / sq[j];  // w-normalized canonical vector
                } else {
                    Eigen::VectorXd b = bases[J.mask].col(j);
                    v = from_eigen(b);
                }
                for (int q = 0; q < d; ++q) {
                    if (!J.contains(q)) continue;
                    FunctionVec s = sys.shift(unit(d, q), v);
                    for (int a = 0; a < sys.n; ++a) v[a] -= s[a];
                }
                for (int a = 0; a < sys.n; ++a) G(a, col) = sq[a] * v[a];
                col_src.emplace_back(J.mask, j);
                ++col;
            }
        }
        // see coboundary_solve: complete orthogonal decomposition for a reliable
        // minimal-norm solve on rank-deficient dictionaries
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
        Eigen::VectorXd coef = cod.solve(rhs);
        for (int c = 0; c < total_cols; ++c) {
            auto [mask, j] = col_src[c];
            if (DirectionSet(d, mask).full()) {
                dec.parts[mask][j] += coef[c] / sq[j];
            } else {
                Eigen::VectorXd b = bases[mask].col(j);
                for (int a = 0; a < sys.n; ++a) dec.parts[mask][a] += coef[c] * b[a];
            }
        }
    }

    FunctionVec rec = reconstruct(sys, dec);
    for (int a = 0; a < sys.n; ++a) rec[a] -= f[a];
    dec.residual = sys.norm(rec);

    certify_parts(sys, dec, opts.cert_tol);
    dec.decomposable = dec.residual <= opts.accept_tol;
    return dec;
}

void certify_parts(const FiniteSystem& sys, DecompositionParts& dec, double cert_tol) {
    const int d = dec.d;
    dec.certified = true;
    for (const DirectionSet& J : all_direction_sets(d)) {
        if (J.full()) continue;
        PartCertificate& cert = dec.certificates[J.mask];
        cert = {};
        FunctionVec c = cond_exp(sys, SigmaSpec::limit(J), dec.parts[J.mask]);
        for (int a = 0; a < sys.n; ++a)
            cert.measurability_violation = std::max(cert.measurability_violation, std::abs(dec.parts[J.mask][a] - c[a]));
        for (const DirectionSet& I : subsets_of(J)) {
            if (I == J) continue;
            FunctionVec p = cond_exp(sys, SigmaSpec::limit(I), dec.parts[J.mask]);
            for (int a = 0; a < sys.n; ++a)
                cert.projection_violation = std::max(cert.projection_violation, std::abs(p[a]));
        }
        if (J.empty()) {
            // the constant-direction part must be an orthomartingale difference
            for (int q = 0; q < d; ++q) {
                MultiIndex j(d);
                j[q] = -1;
                FunctionVec p = cond_exp(sys, SigmaSpec::finite(j), dec.parts[J.mask]);
                for (int a = 0; a < sys.n; ++a)
                    cert.martingale_violation = std::max(cert.martingale_violation, std::abs(p[a]));
            }
        }
        if (cert.measurability_violation > cert_tol || cert.projection_violation > cert_tol ||
            cert.martingale_violation > cert_tol)
            dec.certified = false;
    }
}

GrowthReport growth_diagnostics(const FiniteSystem& sys, const FunctionVec& f, int64_t nmax,
                               const DecomposeOptions& opts) {
    const int d = sys.d;
    GrowthReport rep;
    rep.sup_norm.assign(1u << d, 0.0);
    rep.axis_exponent.assign(1u << d, {});

    Box box(MultiIndex(d), scaled_ones(d, nmax));
    const int64_t vol = box.volume();

    for (const DirectionSet& E : all_direction_sets(d)) {
        std::vector<FunctionVec> G(vol);
        iterate_box(box, [&](const MultiIndex& i) { G[box_offset(box, i)] = apply_PE(sys, E, i, f); });
        // in-place prefix sums along each axis
        for (int q = 0; q < d; ++q) {
            iterate_box(box, [&](const MultiIndex& i) {
                if (i[q] == box.lo[q]) return;
                MultiIndex prev = i;
                prev[q] -= 1;
                FunctionVec& cur = G[box_offset(box, i)];
                const FunctionVec& pre = G[box_offset(box, prev)];
                for (int a = 0; a < sys.n; ++a) cur[a] += pre[a];
            });
        }
        double sup = 0.0;
        iterate_box(box, [&](const MultiIndex& i) { sup = std::max(sup, sys.norm(G[box_offset(box, i)])); });
        rep.sup_norm[E.mask] = sup;

        const double full = sys.norm(G[box_offset(box, scaled_ones(d, nmax))]);
        for (int q = 0; q < d; ++q) {
            MultiIndex half = scaled_ones(d, nmax);
            half[q] = nmax / 2;
            double hn = sys.norm(G[box_offset(box, half)]);
            double expo = (full < 1e-13 || hn < 1e-13) ? 0.0 : std::log2(full / hn);
            rep.axis_exponent[E.mask][q] = expo;
            rep.growth_exponent = std::max(rep.growth_exponent, expo);
        }
    }
    rep.bounded = rep.growth_exponent <= 0.35;
    rep.decomposition = omc_decompose(sys, f, opts);
    rep.consistent = (rep.bounded == rep.decomposition.decomposable);
    return rep;
}

}  // namespace orthofield
