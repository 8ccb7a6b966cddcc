#include "pdmpcert/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace pdmpcert {

std::string format_double(double v) {
    // Shortest representation that parses back to the same double.
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

namespace {

const Json& need(const Json& j, const char* key) {
    if (!j.is_object()) throw IoError(std::string("expected an object holding '") + key + "'");
    auto it = j.find(key);
    if (it == j.end()) throw IoError(std::string("missing key '") + key + "'");
    return *it;
}

double num(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_number()) throw IoError(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

double num_or(const Json& j, const char* key, double fallback) {
    return j.contains(key) ? num(j, key) : fallback;
}

std::string str(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_string()) throw IoError(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const Json& j) {
    if (!j.is_array()) throw IoError("expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw IoError("expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

Json doubles(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(x);
    return a;
}

Json alpha_json(const Eigen::VectorXd& a) {
    Json out = Json::array();
    for (Eigen::Index k = 0; k < a.size(); ++k) out.push_back(a[k]);
    return out;
}

// Parse errors from nlohmann and from enum lookups are reported uniformly.
template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const IoError&) {
        throw;
    } catch (const ModelError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

Json point_to_json(const Point& x) {
    Json a = Json::array();
    for (Eigen::Index k = 0; k < x.size(); ++k) a.push_back(x[k]);
    return a;
}

Point point_from_json(const Json& j) {
    auto v = numbers(j);
    return Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw IoError("expected a nonempty array of rows");
    std::vector<std::vector<double>> rows;
    for (const auto& r : j) rows.push_back(numbers(r));
    const auto cols = rows.front().size();
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw IoError("matrix rows have different lengths");
        for (std::size_t k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return m;
}

// ----------------------------------------------------------------------------

Json domain_to_json(const CompactDomain& dom) {
    Json params = Json::object();
    switch (dom.kind()) {
        case DomainKind::Box:
            params["lower"] = doubles(dom.lower());
            params["upper"] = doubles(dom.upper());
            break;
        case DomainKind::Annulus:
            params["r_min"] = dom.r_min();
            params["r_max"] = dom.r_max();
            params["chart"] = dom.chart() == AnnulusChart::Polar ? "polar" : "cartesian";
            break;
        case DomainKind::QuadrantBand: params["eta"] = dom.eta(); break;
        case DomainKind::Torus:
        case DomainKind::UnitBox: break;
    }
    Json j;
    j["kind"] = to_string(dom.kind());
    j["dimension"] = dom.dimension();
    j["params"] = std::move(params);
    return j;
}

CompactDomain domain_from_json(const Json& j) {
    return guarded("domain", [&] {
        const DomainKind kind = domain_kind_from_string(str(j, "kind"));
        const Json empty = Json::object();
        const Json& p = j.contains("params") ? j.at("params") : empty;
        const int d = j.contains("dimension") ? need(j, "dimension").get<int>() : 2;
        switch (kind) {
            case DomainKind::Box: {
                auto dom = CompactDomain::box(numbers(need(p, "lower")), numbers(need(p, "upper")));
                if (dom.dimension() != d && j.contains("dimension")) throw IoError("box bounds do not match dimension");
                return dom;
            }
            case DomainKind::Annulus: {
                std::string chart = p.contains("chart") ? str(p, "chart") : "polar";
                if (chart != "polar" && chart != "cartesian") throw IoError("annulus chart must be polar|cartesian");
                return CompactDomain::annulus(num(p, "r_min"), num(p, "r_max"),
                                              chart == "polar" ? AnnulusChart::Polar : AnnulusChart::Cartesian);
            }
            case DomainKind::Torus: return CompactDomain::torus(d);
            case DomainKind::QuadrantBand: return CompactDomain::quadrant_band(num(p, "eta"));
            case DomainKind::UnitBox: return CompactDomain::unit_box(d);
        }
        throw IoError("unsupported domain kind");
    });
}

Json schedule_to_json(const SwitchSchedule& s) {
    Json a = Json::array();
    for (std::size_t k = 0; k < s.size(); ++k) a.push_back(Json::array({s.indices[k], s.durations[k]}));
    return a;
}

SwitchSchedule schedule_from_json(const Json& j) {
    if (!j.is_array()) throw IoError("schedule must be an array of [index, duration] pairs");
    SwitchSchedule s;
    for (const auto& leg : j) {
        if (!leg.is_array() || leg.size() != 2 || !leg[0].is_number_integer() || !leg[1].is_number()) {
            throw IoError("schedule legs must be [index, duration] pairs");
        }
        s.append(leg[0].get<int>(), leg[1].get<double>());
    }
    return s;
}

// ----------------------------------------------------------------------------

Json rates_to_json(const RateSpec& spec) {
    Json j;
    if (spec.kind == RateSpec::Kind::Constant) {
        j["kind"] = "constant";
        j["matrix"] = matrix_to_json(spec.base);
    } else {
        j["kind"] = "sin2";
        j["base"] = matrix_to_json(spec.base);
        j["amp"] = matrix_to_json(spec.amp);
        j["freq"] = spec.freq;
        j["axis"] = spec.axis;
    }
    return j;
}

RateSpec rates_from_json(const Json& j, int count) {
    return guarded("rates", [&] {
        const std::string kind = str(j, "kind");
        RateSpec spec;
        if (kind == "symmetric") {
            spec = RateSpec::symmetric(count, num(j, "lambda"));
        } else if (kind == "constant") {
            spec = RateSpec::constant(matrix_from_json(need(j, "matrix")));
        } else if (kind == "sin2") {
            spec.kind = RateSpec::Kind::Sin2;
            spec.base = matrix_from_json(need(j, "base"));
            spec.amp = matrix_from_json(need(j, "amp"));
            spec.freq = num_or(j, "freq", 1.0);
            spec.axis = j.contains("axis") ? need(j, "axis").get<int>() : 0;
        } else {
            throw IoError("unknown rates kind '" + kind + "' (expected symmetric|constant|sin2)");
        }
        if (spec.base.rows() != count || spec.base.cols() != count) {
            throw IoError("rate matrix must be " + std::to_string(count) + "x" + std::to_string(count));
        }
        return spec;
    });
}

namespace {

Json lv_env_json(const LVCoefficients& c) {
    Json j;
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["a"] = c.a;
    j["b"] = c.b;
    j["c"] = c.c;
    j["d"] = c.d;
    return j;
}

LVCoefficients lv_env_from_json(const Json& j) {
    LVCoefficients c;
    c.alpha = num(j, "alpha");
    c.beta = num(j, "beta");
    c.a = num(j, "a");
    c.b = num(j, "b");
    c.c = num(j, "c");
    c.d = num(j, "d");
    return c;
}

}  // namespace

Json params_to_json(const ModelParams& p) {
    Json j = Json::object();
    if (const auto* a = std::get_if<AnnulusParams>(&p)) {
        j["eps_bump"] = a->eps_bump;
        j["g_peak"] = a->g_peak;
    } else if (const auto* t = std::get_if<TorusParams>(&p)) {
        j["eps"] = t->eps;
    } else if (const auto* lv = std::get_if<LVParams>(&p)) {
        j["eta"] = lv->eta;
        j["env"] = Json::array({lv_env_json(lv->env[0]), lv_env_json(lv->env[1])});
    } else if (const auto* s = std::get_if<SISParams>(&p)) {
        j["C"] = Json::array({matrix_to_json(s->C[0]), matrix_to_json(s->C[1])});
        j["D"] = Json::array({point_to_json(s->D[0]), point_to_json(s->D[1])});
    }
    return j;
}

ModelParams params_from_json(ModelKind kind, const Json& j) {
    return guarded("params", [&]() -> ModelParams {
        const Json& p = j;
        switch (kind) {
            case ModelKind::Annulus: {
                AnnulusParams a;
                a.eps_bump = num_or(p, "eps_bump", a.eps_bump);
                a.g_peak = num_or(p, "g_peak", a.g_peak);
                return a;
            }
            case ModelKind::Torus: {
                TorusParams t;
                t.eps = num_or(p, "eps", t.eps);
                return t;
            }
            case ModelKind::LV: {
                LVParams lv;
                lv.eta = num_or(p, "eta", lv.eta);
                const Json& env = need(p, "env");
                if (!env.is_array() || env.size() != 2) throw IoError("lv 'env' must hold two environments");
                lv.env[0] = lv_env_from_json(env[0]);
                lv.env[1] = lv_env_from_json(env[1]);
                return lv;
            }
            case ModelKind::SIS: {
                SISParams s;
                const Json& c = need(p, "C");
                const Json& d = need(p, "D");
                if (!c.is_array() || c.size() != 2 || !d.is_array() || d.size() != 2) {
                    throw IoError("sis 'C' and 'D' must each hold two environments");
                }
                for (int k = 0; k < 2; ++k) {
                    s.C[static_cast<std::size_t>(k)] = matrix_from_json(c[static_cast<std::size_t>(k)]);
                    s.D[static_cast<std::size_t>(k)] = point_from_json(d[static_cast<std::size_t>(k)]);
                }
                return s;
            }
        }
        throw IoError("unsupported model kind");
    });
}

Json model_file_to_json(const ModelFile& mf) {
    Json j;
    ModelKind kind = std::visit(
        [](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, AnnulusParams>) return ModelKind::Annulus;
            else if constexpr (std::is_same_v<P, TorusParams>) return ModelKind::Torus;
            else if constexpr (std::is_same_v<P, LVParams>) return ModelKind::LV;
            else return ModelKind::SIS;
        },
        mf.params);
    j["model"] = to_string(kind);
    j["params"] = params_to_json(mf.params);
    if (mf.rates) j["rates"] = rates_to_json(*mf.rates);
    return j;
}

ModelFile model_file_from_json(const Json& j) {
    return guarded("model file", [&] {
        ModelFile mf;
        const ModelKind kind = model_kind_from_string(str(j, "model"));
        mf.params = params_from_json(kind, j.contains("params") ? j.at("params") : Json::object());
        if (j.contains("rates")) mf.rates = rates_from_json(j.at("rates"), 2);
        return mf;
    });
}

ModelFile load_model_file(const std::filesystem::path& path) { return model_file_from_json(read_json_file(path)); }

Model build_model(const ModelFile& mf) { return build_model(mf.params, mf.rates); }

// ----------------------------------------------------------------------------

Json to_json(const BracketReport& r) {
    Json j;
    j["point"] = point_to_json(r.point);
    j["family_kind"] = to_string(r.kind);
    j["depth_used"] = r.depth_used;
    j["vectors_evaluated"] = r.vectors_evaluated;
    j["singular_values"] = doubles(r.singular_values);
    j["numerical_rank"] = r.numerical_rank;
    j["tolerance_used"] = r.tolerance_used;
    j["sigma_min_kept"] = r.sigma_min_kept;
    j["holds"] = r.holds;
    return j;
}

Json to_json(const ScanResult& r) {
    Json j;
    j["family_kind"] = to_string(r.kind);
    j["depth"] = r.depth;
    j["points"] = r.reports.size();
    j["max_rank"] = r.max_rank;
    j["min_rank"] = r.min_rank;
    j["holds_count"] = r.holds_count;
    Json at = Json::array();
    for (std::size_t k : r.argmax) at.push_back(point_to_json(r.reports[k].point));
    j["max_rank_points"] = std::move(at);
    return j;
}

Json to_json(const EquilibriumCertificate& c) {
    Json j;
    j["valid"] = c.valid;
    j["e_star"] = point_to_json(c.e_star);
    j["alpha"] = alpha_json(c.alpha);
    j["residual"] = c.residual;
    j["tol_eq"] = c.tol_eq;
    j["degenerate"] = c.degenerate;
    j["solver_trace"] = Json{{"seeds_tried", c.seeds_tried}, {"iterations", c.iterations}, {"candidates", c.candidates}};
    return j;
}

Json to_json(const ReachabilityResult& r) {
    Json j;
    j["start"] = point_to_json(r.start);
    j["target"] = point_to_json(r.target);
    j["delta"] = r.delta;
    j["success"] = r.success();
    j["witness"] = r.witness ? schedule_to_json(*r.witness) : Json(nullptr);
    j["closest_distance"] = r.closest_distance;
    j["nodes_expanded"] = r.nodes_expanded;
    return j;
}

Json to_json(const SubmersionCertificate& c) {
    Json j;
    j["valid"] = c.valid;
    j["base"] = point_to_json(c.base);
    j["schedule"] = schedule_to_json(c.schedule);
    j["terminal_index"] = c.terminal_index;
    j["s"] = c.s;
    j["singular_values"] = doubles(c.singular_values);
    j["rank"] = c.rank;
    j["sigma_min_kept"] = c.sigma_min_kept;
    j["trials"] = c.trials;
    return j;
}

Json to_json(const ErgodicityCertificate& c) {
    Json j;
    j["verdict"] = to_string(c.verdict);
    j["note"] = c.note;
    const bool weak_ok = c.weak_point.found && c.weak_point.report.holds;
    j["status"] = Json{{"condition_i", c.condition_i.valid},
                       {"weak_point", weak_ok},
                       {"reach_estar_to_xstar", c.reach_estar_to_xstar.success()},
                       {"reach_global_to_estar", c.global_reach_ok}};
    j["condition_i"] = to_json(c.condition_i);
    j["strong_at_e_star"] = to_json(c.strong_at_e_star);
    Json wp;
    wp["found"] = c.weak_point.found;
    wp["at_e_star"] = c.weak_point.at_e_star;
    wp["x_star"] = point_to_json(c.weak_point.x_star);
    wp["report"] = to_json(c.weak_point.report);
    j["weak_point"] = std::move(wp);
    j["reach_estar_to_xstar"] = to_json(c.reach_estar_to_xstar);
    Json g = Json::array();
    for (const auto& r : c.reach_global_to_estar) g.push_back(to_json(r));
    j["reach_global_to_estar"] = std::move(g);
    j["submersion"] = c.submersion ? to_json(*c.submersion) : Json(nullptr);
    return j;
}

Json to_json(const TVDecayReport& r) {
    Json j;
    j["times"] = doubles(r.times);
    j["tv"] = doubles(r.tv);
    Json fit = Json::array();
    for (bool b : r.in_fit) fit.push_back(b);
    j["in_fit"] = std::move(fit);
    j["floor_sqrt"] = r.floor_sqrt;
    j["floor_null"] = doubles(r.floor_null);
    j["gamma_defined"] = r.gamma_defined;
    j["gamma"] = r.gamma_defined ? Json(r.gamma) : Json(nullptr);
    j["intercept"] = r.gamma_defined ? Json(r.intercept) : Json(nullptr);
    j["r2"] = r.gamma_defined ? Json(r.r2) : Json(nullptr);
    j["flag"] = r.flag;
    j["bins"] = r.bins;
    j["replicates"] = r.replicates;
    return j;
}

Json to_json(const InvasionEstimate& e) {
    Json j;
    j["face"] = e.face == Face::Y ? "y" : "x";
    j["rate"] = e.face == Face::Y ? "Lambda_y" : "Lambda_x";
    j["value"] = e.value;
    j["se"] = e.se;
    j["t_max"] = e.t_max;
    j["burn_in"] = e.burn_in;
    j["samples"] = e.samples;
    return j;
}

Json to_json(const StationarityResult& r) {
    return Json{{"name", r.name}, {"residual", r.residual}, {"se", r.se}, {"samples", r.samples}};
}

Json to_json(const SISLambdaCurve& c) {
    Json j;
    j["lambda0"] = c.lambda0;
    j["lambda1"] = c.lambda1;
    j["max_lambda"] = c.max_lambda;
    j["argmax_s"] = c.argmax_s;
    j["sign_changes"] = doubles(c.sign_changes);
    j["premises_hold"] = c.premises_hold;
    j["points"] = c.s.size();
    return j;
}

Json to_json(const SISEquilibrium& e) {
    Json j;
    j["origin"] = e.origin;
    j["x"] = point_to_json(e.x);
    j["lambda"] = e.lambda;
    j["newton_converged"] = e.newton_converged;
    j["method"] = e.method;
    return j;
}

Json to_json(const LVIntervals& iv) {
    auto intervals = [](const std::vector<std::pair<double, double>>& v) {
        Json a = Json::array();
        for (const auto& [lo, hi] : v) a.push_back(Json::array({lo, hi}));
        return a;
    };
    Json j;
    j["I"] = intervals(iv.I);
    j["J"] = intervals(iv.J);
    j["I_degenerate"] = iv.I_degenerate;
    j["J_degenerate"] = iv.J_degenerate;
    j["I_roots"] = doubles(iv.I_roots);
    j["J_roots"] = doubles(iv.J_roots);
    return j;
}

Json to_json(const LVClassification& c) {
    Json j;
    j["s"] = c.s;
    j["regime"] = to_string(c.regime);
    j["coefficients"] = lv_env_json(c.coeffs);
    j["in_I"] = c.in_I;
    j["in_J"] = c.in_J;
    j["axis_x"] = point_to_json(c.axis_x);
    j["axis_y"] = point_to_json(c.axis_y);
    j["interior"] = c.interior ? point_to_json(*c.interior) : Json(nullptr);
    j["attractor"] = point_to_json(c.attractor);
    return j;
}

Json to_json(const InvarianceReport& r) {
    Json j;
    j["passed"] = r.passed;
    j["max_excursion"] = r.max_excursion;
    j["slack"] = r.slack;
    j["paths_checked"] = r.paths_checked;
    j["worst_start"] = point_to_json(r.worst_start);
    j["worst_field"] = r.worst_field;
    return j;
}

Json trajectory_summary(const Trajectory& tr) {
    Json j;
    j["seed"] = tr.seed;
    j["t_max"] = tr.t_max;
    j["jumps"] = tr.jump_times.size();
    j["initial_mode"] = tr.modes.empty() ? 0 : tr.modes.front();
    j["final_x"] = point_to_json(tr.final_x);
    j["final_mode"] = tr.final_mode;
    j["rate_bound"] = tr.rate_bound;
    j["candidates"] = tr.candidates;
    j["samples"] = tr.sample_count();
    return j;
}

// ----------------------------------------------------------------------------

std::string trajectory_csv(const Trajectory& tr) {
    std::ostringstream out;
    out << "t";
    for (int k = 0; k < tr.dimension; ++k) out << ",x" << (k + 1);
    out << ",i\n";
    for (std::size_t n = 0; n < tr.sample_count(); ++n) {
        out << format_double(tr.sample_t[n]);
        for (double v : tr.sample(n)) out << ',' << format_double(v);
        out << ',' << tr.sample_mode[n] << '\n';
    }
    return out.str();
}

std::string tv_decay_csv(const TVDecayReport& r) {
    std::ostringstream out;
    out << "t,tv,floor,in_fit\n";
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        double floor = std::max(r.floor_sqrt, k < r.floor_null.size() ? r.floor_null[k] : 0.0);
        out << format_double(r.times[k]) << ',' << format_double(r.tv[k]) << ',' << format_double(floor) << ','
            << (k < r.in_fit.size() && r.in_fit[k] ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string stationarity_csv(const std::vector<StationarityResult>& rs) {
    std::ostringstream out;
    out << "g_name,residual,se\n";
    for (const auto& r : rs) out << r.name << ',' << format_double(r.residual) << ',' << format_double(r.se) << '\n';
    return out.str();
}

std::string sis_curve_csv(const SISLambdaCurve& c) {
    std::ostringstream out;
    out << "s,lambda\n";
    for (std::size_t k = 0; k < c.s.size(); ++k) out << format_double(c.s[k]) << ',' << format_double(c.lambda[k]) << '\n';
    return out.str();
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const std::exception& e) {
        throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename onto '" + path.string() + "': " + ec.message());
    }
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace pdmpcert
