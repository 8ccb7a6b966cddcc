#include "pdmpcert/certify.hpp"

#include "pdmpcert/models.hpp"
#include "pdmpcert/parallel.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace pdmpcert {

AlphaSolution solve_alpha(const VectorFieldSet& fs, const Point& x) {
    const Matrix B = field_matrix(fs, x);
    const int n = fs.count();
    Matrix kkt = Matrix::Zero(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = 2.0 * B.transpose() * B;
    kkt.block(0, n, n, 1).setOnes();
    kkt.block(n, 0, 1, n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs[n] = 1.0;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
    cod.setThreshold(1e-12);
    Eigen::VectorXd sol = cod.solve(rhs);
    AlphaSolution out;
    out.alpha = sol.head(n);
    out.degenerate = cod.rank() < n + 1;
    if (out.degenerate) {
        // Least-squares pseudo-solution may violate the constraint; restore it.
        out.alpha.array() += (1.0 - out.alpha.sum()) / n;
    }
    out.residual = (B * out.alpha).norm();
    return out;
}

NelderMeadResult nelder_mead(const std::function<double(const Point&)>& f, const Point& x0, double size,
                             int max_iterations, double ftol, int max_restarts) {
    const auto n = x0.size();
    NelderMeadResult res;
    Point best = x0;
    double best_value = f(x0);
    int total_iter = 0;
    for (int restart = 0; restart <= max_restarts; ++restart) {
        std::vector<Point> simplex(static_cast<std::size_t>(n + 1), best);
        std::vector<double> values(static_cast<std::size_t>(n + 1), best_value);
        for (Eigen::Index k = 0; k < n; ++k) {
            simplex[static_cast<std::size_t>(k + 1)][k] += size;
            values[static_cast<std::size_t>(k + 1)] = f(simplex[static_cast<std::size_t>(k + 1)]);
        }
        std::vector<std::size_t> order(simplex.size());
        int iter = 0;
        for (; iter < max_iterations; ++iter) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
            const std::size_t lo = order.front(), hi = order.back(), nh = order[order.size() - 2];
            if (std::abs(values[hi] - values[lo]) <= ftol * (std::abs(values[lo]) + 1e-300) + 1e-300) break;
            Point centroid = Point::Zero(n);
            for (std::size_t k = 0; k < simplex.size(); ++k) {
                if (k != hi) centroid += simplex[k];
            }
            centroid /= static_cast<double>(n);
            Point xr = centroid + (centroid - simplex[hi]);
            double fr = f(xr);
            if (fr < values[lo]) {
                Point xe = centroid + 2.0 * (centroid - simplex[hi]);
                double fe = f(xe);
                if (fe < fr) {
                    simplex[hi] = xe;
                    values[hi] = fe;
                } else {
                    simplex[hi] = xr;
                    values[hi] = fr;
                }
            } else if (fr < values[nh]) {
                simplex[hi] = xr;
                values[hi] = fr;
            } else {
                bool outside = fr < values[hi];
                Point xc = outside ? Point(centroid + 0.5 * (xr - centroid)) : Point(centroid + 0.5 * (simplex[hi] - centroid));
                double fc = f(xc);
                if (fc < std::min(fr, values[hi])) {
                    simplex[hi] = xc;
                    values[hi] = fc;
                } else {
                    for (std::size_t k = 0; k < simplex.size(); ++k) {
                        if (k == lo) continue;
                        simplex[k] = simplex[lo] + 0.5 * (simplex[k] - simplex[lo]);
                        values[k] = f(simplex[k]);
                    }
                }
            }
        }
        total_iter += iter;
        auto it = std::min_element(values.begin(), values.end());
        const auto k = static_cast<std::size_t>(it - values.begin());
        bool improved = *it < best_value;
        if (*it <= best_value) {
            best_value = *it;
            best = simplex[k];
        }
        res.restarts = restart;
        if (!improved && restart > 0) break;
        // Shrink the restart simplex so later restarts refine.
        double spread = 0.0;
        for (const auto& p : simplex) spread = std::max(spread, (p - best).cwiseAbs().maxCoeff());
        size = std::max(spread, 1e-12);
    }
    res.x = best;
    res.value = best_value;
    res.iterations = total_iter;
    return res;
}

// ----------------------------------------------------------------------------

namespace {

constexpr std::size_t kWeakNodeTries = 32;

bool lex_less(const Point& a, const Point& b) {
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a[k] != b[k]) return a[k] < b[k];
    }
    return false;
}

}  // namespace

EquilibriumCertificate find_condition_i(const VectorFieldSet& fs, const CompactDomain& dom,
                                        const ConditionIOptions& opts) {
    if (dom.dimension() != fs.dimension()) throw std::invalid_argument("domain and field set dimensions differ");
    const double diam = dom.diameter();
    auto excluded_by = [&](const Point& p) {
        if (!opts.extinction_distance) return 0.0;
        return std::max(0.0, opts.delta0 - opts.extinction_distance(p)) / opts.delta0;
    };
    auto residual_at = [&](const Point& x) {
        Point p = dom.project(x);
        double r = solve_alpha(fs, p).residual;
        return r + 10.0 * dom.excursion(dom.wrap(x)) + excluded_by(p);
    };
    auto residual_sq = [&](const Point& x) {
        double r = residual_at(x);
        return r * r;
    };

    std::vector<Point> seeds = opts.seeds.empty() ? dom.sample_grid(opts.seed_resolution) : opts.seeds;
    EquilibriumCertificate cert;
    cert.tol_eq = opts.tol_eq;

    struct Candidate {
        Point x;
        AlphaSolution sol;
    };
    std::vector<Candidate> valid;
    Candidate best_any{Point(), AlphaSolution{}};
    double best_any_res = std::numeric_limits<double>::infinity();

    auto finalize = [&](const Point& x) {
        Candidate c{dom.project(x), AlphaSolution{}};
        c.sol = solve_alpha(fs, c.x);
        return c;
    };
    auto admissible = [&](const Candidate& c) {
        return c.sol.residual < opts.tol_eq && excluded_by(c.x) == 0.0;
    };

    for (const auto& seed : seeds) {
        ++cert.seeds_tried;
        auto r1 = nelder_mead(residual_at, seed, 0.1 * diam, opts.iterations);
        auto r2 = nelder_mead(residual_sq, r1.x, 1e-3 * diam, 2 * opts.iterations, 1e-15, 2);
        cert.iterations += static_cast<std::size_t>(r1.iterations + r2.iterations);
        Candidate c = finalize(r2.x);
        double score = c.sol.residual + excluded_by(c.x);
        if (score < best_any_res || (score == best_any_res && lex_less(c.x, best_any.x))) {
            best_any_res = score;
            best_any = c;
        }
        if (admissible(c)) valid.push_back(std::move(c));
    }
    cert.candidates = valid.size();

    if (valid.empty()) {
        cert.e_star = best_any.x;
        cert.alpha = best_any.sol.alpha;
        cert.residual = best_any.sol.residual;
        cert.degenerate = best_any.sol.degenerate;
        cert.valid = false;
        return cert;
    }

    if (opts.minimize_alpha_norm) {
        // Quadratic-penalty continuation: |alpha|^2 + kappa r^2 with kappa growing.
        std::vector<Candidate> refined;
        for (const auto& c : valid) {
            Point x = c.x;
            double size = 1e-2 * diam;
            for (double kappa = 1e2; kappa <= 1e12; kappa *= 100.0) {
                auto objective = [&](const Point& y) {
                    Point p = dom.project(y);
                    AlphaSolution s = solve_alpha(fs, p);
                    double r = s.residual + 10.0 * dom.excursion(dom.wrap(y)) + excluded_by(p);
                    return s.alpha.squaredNorm() + kappa * r * r;
                };
                auto r = nelder_mead(objective, x, size, opts.iterations, 1e-16, 3);
                cert.iterations += static_cast<std::size_t>(r.iterations);
                x = r.x;
                size = std::max(size * 0.2, 1e-7 * diam);
            }
            auto polish = nelder_mead(residual_sq, x, 1e-7 * diam, 2 * opts.iterations, 1e-16, 2);
            cert.iterations += static_cast<std::size_t>(polish.iterations);
            Candidate f = finalize(polish.x);
            refined.push_back(admissible(f) ? f : c);
        }
        valid = std::move(refined);
    }

    // Common zeros of all fields: there every alpha works and the least-norm one is uniform.
    for (const auto& seed : seeds) {
        auto total_sq = [&](const Point& y) {
            Point p = dom.project(y);
            double v = field_matrix(fs, p).squaredNorm() + 10.0 * dom.excursion(dom.wrap(y)) + excluded_by(p);
            return v;
        };
        auto r = nelder_mead(total_sq, seed, 0.1 * diam, opts.iterations, 1e-16, 3);
        cert.iterations += static_cast<std::size_t>(r.iterations);
        Point p = dom.project(r.x);
        if (std::sqrt(field_matrix(fs, p).squaredNorm()) < opts.tol_eq && excluded_by(p) == 0.0) {
            Candidate c = finalize(p);
            c.sol.alpha = Eigen::VectorXd::Constant(fs.count(), 1.0 / fs.count());
            c.sol.residual = (field_matrix(fs, p) * c.sol.alpha).norm();
            c.sol.degenerate = true;
            valid.push_back(std::move(c));
            ++cert.candidates;
        }
    }

    auto better = [&](const Candidate& a, const Candidate& b) {
        if (opts.minimize_alpha_norm) {
            double na = a.sol.alpha.squaredNorm(), nb = b.sol.alpha.squaredNorm();
            if (std::abs(na - nb) > 1e-9 * std::max(1.0, nb)) return na < nb;
        }
        if (a.sol.residual != b.sol.residual) return a.sol.residual < b.sol.residual;
        return lex_less(a.x, b.x);
    };
    const Candidate* pick = &valid.front();
    for (const auto& c : valid) {
        if (better(c, *pick)) pick = &c;
    }
    cert.e_star = pick->x;
    cert.alpha = pick->sol.alpha;
    cert.residual = pick->sol.residual;
    cert.degenerate = pick->sol.degenerate;
    cert.valid = true;
    return cert;
}

// ----------------------------------------------------------------------------

SwitchSchedule ReachTree::schedule_to(std::size_t node) const {
    SwitchSchedule s;
    std::vector<std::size_t> path;
    for (long k = static_cast<long>(node); k > 0; k = parent[static_cast<std::size_t>(k)]) {
        path.push_back(static_cast<std::size_t>(k));
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) s.append(index[*it], duration[*it]);
    return s;
}

std::size_t ReachTree::nearest(const CompactDomain& dom, const Point& p) const {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        double d = dom.distance(nodes[k], p);
        if (d < bd) {
            bd = d;
            best = k;
        }
    }
    return best;
}

ReachTree explore_reachable(const VectorFieldSet& fs, const CompactDomain& dom, const Point& x0,
                            const ReachOptions& opts) {
    if (x0.size() != fs.dimension()) throw std::invalid_argument("start point dimension mismatch");
    if (!(opts.tau_max > 0.0)) throw std::invalid_argument("tau_max must be positive");
    std::vector<int> allowed = opts.allowed;
    if (allowed.empty()) {
        allowed.resize(static_cast<std::size_t>(fs.count()));
        std::iota(allowed.begin(), allowed.end(), 0);
    }
    for (int i : allowed) fs.check_index(i);

    ReachTree tree;
    tree.nodes.push_back(dom.wrap(x0));
    tree.parent.push_back(-1);
    tree.index.push_back(-1);
    tree.duration.push_back(0.0);
    auto reached = [&](const Point& p) { return opts.target && dom.distance(p, *opts.target) <= opts.delta; };
    if (reached(tree.nodes.front())) return tree;

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    FlowStepper stepper(fs, opts.flow);
    for (std::size_t n = 0; n < opts.budget; ++n) {
        std::size_t from;
        double u = unif(rng);
        if (opts.target && u < opts.target_bias) {
            from = tree.nearest(dom, *opts.target);
        } else if (unif(rng) < opts.goal_bias) {
            from = tree.nearest(dom, dom.sample_uniform(rng));
        } else {
            from = std::uniform_int_distribution<std::size_t>(0, tree.nodes.size() - 1)(rng);
        }
        int i = allowed[std::uniform_int_distribution<std::size_t>(0, allowed.size() - 1)(rng)];
        double tau = (1.0 - unif(rng)) * opts.tau_max;
        Point y = tree.nodes[from];
        stepper.advance(i, tau, std::span<double>(y.data(), y.size()));
        y = dom.wrap(y);
        tree.nodes.push_back(y);
        tree.parent.push_back(static_cast<long>(from));
        tree.index.push_back(i);
        tree.duration.push_back(tau);
        if (reached(y)) break;
    }
    return tree;
}

std::vector<ReachabilityResult> accessible(const VectorFieldSet& fs, const CompactDomain& dom, const Point& target,
                                           const std::vector<Point>& starts, double delta, ReachOptions opts,
                                           int threads) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    opts.target = target;
    opts.delta = delta;
    std::vector<ReachabilityResult> out(starts.size());
    parallel_for(starts.size(), threads, [&](std::size_t k) {
        ReachOptions o = opts;
        o.seed = derive_seed(opts.seed, k);
        ReachTree tree = explore_reachable(fs, dom, starts[k], o);
        std::size_t best = tree.nearest(dom, target);
        ReachabilityResult r;
        r.target = target;
        r.start = starts[k];
        r.delta = delta;
        r.closest_distance = dom.distance(tree.nodes[best], target);
        r.nodes_expanded = tree.nodes.size() - 1;
        if (r.closest_distance <= delta) {
            SwitchSchedule w = tree.schedule_to(best);
            Point end = composite(fs, w, starts[k], o.flow);
            if (dom.distance(end, target) <= delta) r.witness = std::move(w);
        }
        out[k] = std::move(r);
    });
    return out;
}

// ----------------------------------------------------------------------------

SubmersionCertificate check_submersion(const VectorFieldSet& fs, const Point& base, const SwitchSchedule& schedule,
                                       int terminal_index, double s, const FlowConfig& cfg, const RankTolerance& tol) {
    Matrix jac = duration_jacobian(fs, schedule, terminal_index, s, base, cfg);
    RankInfo info = numerical_rank(jac, tol);
    SubmersionCertificate c;
    c.base = base;
    c.schedule = schedule;
    c.terminal_index = terminal_index;
    c.s = s;
    c.singular_values = std::move(info.singular_values);
    c.rank = info.rank;
    c.sigma_min_kept = info.sigma_min_kept;
    c.valid = info.rank == fs.dimension();
    c.trials = 1;
    return c;
}

SubmersionCertificate find_submersion(const VectorFieldSet& fs, const Point& base, const SubmersionOptions& opts) {
    if (opts.m_min < 1 || opts.m_max < opts.m_min) throw std::invalid_argument("invalid schedule length range");
    if (!(opts.s_min > 0.0) || opts.s_max < opts.s_min) throw std::invalid_argument("invalid total-time range");
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    SubmersionCertificate best;
    best.base = base;
    bool have_best = false;
    auto better = [](const SubmersionCertificate& a, const SubmersionCertificate& b) {
        if (a.rank != b.rank) return a.rank > b.rank;
        return a.sigma_min_kept > b.sigma_min_kept;
    };
    for (std::size_t trial = 0; trial < opts.budget; ++trial) {
        int m = std::uniform_int_distribution<int>(opts.m_min, opts.m_max)(rng);
        double s = opts.s_min + (opts.s_max - opts.s_min) * unif(rng);
        std::vector<double> w(static_cast<std::size_t>(m + 1));
        for (double& v : w) v = expo(rng);
        double total = std::accumulate(w.begin(), w.end(), 0.0);
        SwitchSchedule sched;
        for (int k = 0; k < m; ++k) {
            sched.append(std::uniform_int_distribution<int>(0, fs.count() - 1)(rng),
                         s * w[static_cast<std::size_t>(k)] / total);
        }
        int terminal = std::uniform_int_distribution<int>(0, fs.count() - 1)(rng);
        if (!(sched.total_duration() < s)) continue;
        SubmersionCertificate c = check_submersion(fs, base, sched, terminal, s, opts.flow, opts.tol);
        c.valid = c.valid && c.sigma_min_kept >= opts.min_sigma;
        if (!have_best || better(c, best)) {
            best = c;
            have_best = true;
        }
        if (c.valid) {
            best.trials = trial + 1;
            return best;
        }
    }
    best.valid = false;
    best.trials = opts.budget;
    return best;
}

// ----------------------------------------------------------------------------

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Certified: return "certified-numerically";
        case Verdict::Partial: return "partial";
        case Verdict::Failed: return "failed";
    }
    return "unknown";
}

ErgodicityCertificate certify_ergodicity(const VectorFieldSet& fs, const CompactDomain& dom, const CertifyConfig& cfg) {
    ErgodicityCertificate cert;
    cert.condition_i = find_condition_i(fs, dom, cfg.condition_i);
    const Point& e_star = cert.condition_i.e_star;
    cert.strong_at_e_star = bracket_report(fs, FamilyKind::Strong, cfg.bracket_depth, e_star, cfg.rank_tol);

    // Condition (ii): a weak-bracket point accessible from e_star.
    BracketReport at_e = bracket_report(fs, FamilyKind::Weak, cfg.bracket_depth, e_star, cfg.rank_tol);
    ReachOptions reach = cfg.reach;
    reach.seed = derive_seed(cfg.seed, 1);
    if (at_e.holds) {
        cert.weak_point = WeakPoint{e_star, at_e, true, true};
        ReachabilityResult r;
        r.target = e_star;
        r.start = e_star;
        r.delta = cfg.delta;
        r.witness = SwitchSchedule{};
        cert.reach_estar_to_xstar = r;
    } else {
        ScanResult sc = scan(fs, dom, FamilyKind::Weak, cfg.bracket_depth, cfg.scan_resolution, cfg.rank_tol,
                             cfg.threads);
        ReachOptions free = reach;
        free.target.reset();
        ReachTree tree = explore_reachable(fs, dom, e_star, free);
        // Holding grid points ranked by distance to the tree; the bracket
        // condition is then checked at the nearest reached node itself.
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t k = 0; k < sc.reports.size(); ++k) {
            if (!sc.reports[k].holds) continue;
            std::size_t node = tree.nearest(dom, sc.reports[k].point);
            ranked.emplace_back(dom.distance(tree.nodes[node], sc.reports[k].point), node);
        }
        std::sort(ranked.begin(), ranked.end());
        ReachabilityResult r;
        r.start = e_star;
        r.delta = cfg.delta;
        r.nodes_expanded = tree.nodes.size() - 1;
        r.target = e_star;
        r.closest_distance = std::numeric_limits<double>::infinity();
        cert.weak_point = WeakPoint{e_star, at_e, false, false};
        const std::size_t tries = std::min<std::size_t>(ranked.size(), kWeakNodeTries);
        std::vector<std::size_t> seen;
        for (std::size_t t = 0; t < tries; ++t) {
            const std::size_t node = ranked[t].second;
            if (std::find(seen.begin(), seen.end(), node) != seen.end()) continue;
            seen.push_back(node);
            BracketReport rep = bracket_report(fs, FamilyKind::Weak, cfg.bracket_depth, tree.nodes[node], cfg.rank_tol);
            if (rep.holds) {
                cert.weak_point = WeakPoint{tree.nodes[node], rep, true, false};
                r.target = tree.nodes[node];
                r.closest_distance = 0.0;
                r.witness = tree.schedule_to(node);
                break;
            }
        }
        if (!r.witness && !ranked.empty()) r.closest_distance = ranked.front().first;
        cert.reach_estar_to_xstar = r;
    }

    // Global accessibility of e_star (from M_+ when there is an extinction set).
    std::vector<Point> starts;
    for (const auto& p : dom.sample_grid(cfg.global_resolution)) {
        const auto& ext = cfg.condition_i.extinction_distance;
        if (ext && ext(p) < cfg.condition_i.delta0) continue;
        starts.push_back(p);
    }
    ReachOptions global = reach;
    global.seed = derive_seed(cfg.seed, 2);
    cert.reach_global_to_estar = accessible(fs, dom, e_star, starts, cfg.delta, global, cfg.threads);
    cert.global_reach_ok = !starts.empty() &&
                           std::all_of(cert.reach_global_to_estar.begin(), cert.reach_global_to_estar.end(),
                                       [](const ReachabilityResult& r) { return r.success(); });

    if (cfg.run_submersion) {
        SubmersionOptions so = cfg.submersion;
        so.seed = derive_seed(cfg.seed, 3);
        cert.submersion = find_submersion(fs, e_star, so);
    }

    const bool parts[] = {cert.condition_i.valid, cert.weak_point.found && cert.weak_point.report.holds,
                          cert.reach_estar_to_xstar.success(), cert.global_reach_ok};
    const auto held = std::count(std::begin(parts), std::end(parts), true);
    cert.verdict = held == 4 ? Verdict::Certified : (held > 0 ? Verdict::Partial : Verdict::Failed);
    return cert;
}

ErgodicityCertificate certify_ergodicity(const Model& model, CertifyConfig cfg) {
    if (model.has_extinction_set() && !cfg.condition_i.extinction_distance) {
        cfg.condition_i.extinction_distance = [kind = model.kind](const Point& x) {
            return kind == ModelKind::LV ? std::min(x[0], x[1]) : x.norm();
        };
    }
    return certify_ergodicity(model.fields, model.domain, cfg);
}

}  // namespace pdmpcert
