// Batch front end: JSON model files in, CSV/JSON artifacts out.

#include "pdmpcert/bracket.hpp"
#include "pdmpcert/certify.hpp"
#include "pdmpcert/io.hpp"
#include "pdmpcert/models.hpp"
#include "pdmpcert/parallel.hpp"
#include "pdmpcert/pdmp.hpp"
#include "pdmpcert/stats.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

using namespace pdmpcert;
namespace fs = std::filesystem;

namespace {

constexpr int kExitPartial = 2;
constexpr int kExitFailed = 3;
constexpr int kExitModule = 1;
constexpr int kExitUsage = 64;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --config reads JSON: top-level keys are global options, objects named after
// a subcommand hold that subcommand's options.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        Json j = Json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
            std::string value = opt->count() > 0 ? opt->as<std::string>() : (default_also ? opt->get_default_str() : "");
            if (!value.empty()) j[opt->get_lnames().front()] = value;
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        Json j;
        try {
            j = Json::parse(in);
        } catch (const std::exception& e) {
            throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const Json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number_float()) return format_double(v.get<double>());
        return v.dump();
    }

    static void collect(const Json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it->is_object()) {
                auto p = parents;
                p.push_back(it.key());
                collect(*it, p, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = it.key();
            if (it->is_array()) {
                for (const auto& v : *it) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(*it));
            }
            items.push_back(std::move(item));
        }
    }
};

struct Globals {
    std::uint64_t seed = 0;
    std::string out = ".";
    int threads = 1;
};

struct Artifacts {
    std::map<std::string, std::string> files;
    Json summary;
    int exit_code = 0;
};

Point to_point(const std::vector<double>& v, const Model& m, const char* what) {
    if (static_cast<int>(v.size()) != m.fields.dimension()) {
        throw UsageError(std::string(what) + " needs " + std::to_string(m.fields.dimension()) + " coordinates");
    }
    return Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Point parse_point_text(const std::string& text, const Model& m, const char* what) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError(std::string(what) + ": cannot parse '" + text + "'");
        }
    }
    return to_point(v, m, what);
}

/// "a:b:step" (inclusive) or a comma-separated list.
std::vector<double> parse_times(const std::string& text) {
    std::vector<double> out;
    try {
        if (text.find(':') != std::string::npos) {
            std::vector<double> parts;
            std::stringstream ss(text);
            std::string tok;
            while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
            if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) throw UsageError("bad range");
            const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
            for (long k = 0; k <= n; ++k) out.push_back(parts[0] + static_cast<double>(k) * parts[2]);
        } else {
            std::stringstream ss(text);
            std::string tok;
            while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
        }
    } catch (const std::exception&) {
        throw UsageError("--times expects start:stop:step or a comma list, got '" + text + "'");
    }
    if (out.empty()) throw UsageError("--times is empty");
    return out;
}

FlowConfig flow_config(const std::string& integrator, double step, double rel_tol, double abs_tol) {
    if (integrator == "rk4") return FlowConfig::rk4(step);
    if (integrator == "rk45") return FlowConfig::rk45(rel_tol, abs_tol);
    throw UsageError("--integrator must be rk4 or rk45");
}

/// Default initial states (x_a, mode 0) and (x_b, mode 1) per model.
std::pair<Point, Point> default_starts(ModelKind kind) {
    Point a(2), b(2);
    switch (kind) {
        case ModelKind::Torus: a << 0.0, 0.0; b << 0.5, 0.5; break;
        case ModelKind::Annulus: a << 0.0, 1.0; b << std::numbers::pi, 1.5; break;
        case ModelKind::LV: a << 0.5, 0.5; b << 2.0, 3.0; break;
        case ModelKind::SIS: a << 0.1, 0.1; b << 0.9, 0.9; break;
    }
    return {a, b};
}

Model load(const std::string& path) {
    if (path.empty()) throw UsageError("a model file is required");
    if (!fs::exists(path)) throw IoError("model file '" + path + "' does not exist");
    return build_model(load_model_file(path));
}

void require_kind(const Model& m, ModelKind kind, const char* command) {
    if (m.kind != kind) throw UsageError(std::string(command) + " needs a " + to_string(kind) + " model");
}

std::string exe_stamp() {
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void write_log(const fs::path& out, const std::string& command_line, int code, double seconds) {
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream log(out / "pdmpcert.log", std::ios::app);
    if (log) log << exe_stamp() << " exit=" << code << " seconds=" << seconds << " cmd=" << command_line << '\n';
}

void emit(const Artifacts& a, const Globals& g) {
    for (const auto& [name, content] : a.files) write_file_atomic(fs::path(g.out) / name, content);
    std::cout << json_text(a.summary);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and ergodicity certification for randomly switched vector fields.\n"
                 "Exit codes: 0 success (certify: certified-numerically), 2 partial, 3 failed, 1 module error, "
                 "64 usage error.",
                 "pdmpcert"};
    app.option_defaults()->always_capture_default();
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file with option values (subcommand options under a key named after it)");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Base seed of every random stream");
    app.add_option("--out", g.out, "Output directory for artifacts");
    app.add_option("--threads", g.threads, "Maximum concurrent workers (0 = all cores)")->check(CLI::NonNegativeNumber);

    std::function<Artifacts()> run;
    std::string model_path;
    auto add_model = [&](CLI::App* sub) { sub->add_option("model", model_path, "Model JSON file")->required(); };

    // ---------------------------------------------------------------- certify
    auto* certify = app.add_subcommand("certify", "Check conditions (i), (ii) and accessibility; writes certificate.json");
    add_model(certify);
    CertifyConfig cc;
    std::vector<int> cc_seed_res = cc.condition_i.seed_resolution;
    bool cc_no_sub = false;
    certify->add_option("--depth", cc.bracket_depth, "Bracket depth K")->check(CLI::Range(0, kMaxJetLevel));
    certify->add_option("--tol-eq", cc.condition_i.tol_eq, "Residual tolerance of condition (i)");
    certify->add_option("--seed-res", cc_seed_res, "Nelder-Mead seed grid")->delimiter(',');
    certify->add_option("--delta0", cc.condition_i.delta0, "Exclusion radius around the extinction set");
    certify->add_option("--scan-res", cc.scan_resolution, "Grid searched for a weak-bracket point")->delimiter(',');
    certify->add_option("--delta", cc.delta, "Accessibility radius");
    certify->add_option("--budget", cc.reach.budget, "Reachability tree nodes per start");
    certify->add_option("--tau-max", cc.reach.tau_max, "Maximum leg duration in the tree");
    certify->add_option("--goal-bias", cc.reach.goal_bias, "Probability of extending towards a random goal");
    certify->add_option("--target-bias", cc.reach.target_bias, "Probability of extending towards the target");
    certify->add_option("--global-res", cc.global_resolution, "Start grid for global accessibility")->delimiter(',');
    certify->add_flag("--no-submersion", cc_no_sub, "Skip the submersion search");
    certify->add_option("--submersion-budget", cc.submersion.budget, "Random schedules tried");
    certify->add_option("--s-min", cc.submersion.s_min, "Smallest total time of a submersion schedule");
    certify->add_option("--s-max", cc.submersion.s_max, "Largest total time of a submersion schedule");
    certify->callback([&] {
        run = [&] {
            Model m = load(model_path);
            cc.condition_i.seed_resolution = cc_seed_res;
            cc.run_submersion = !cc_no_sub;
            cc.seed = g.seed;
            cc.threads = g.threads;
            ErgodicityCertificate cert = certify_ergodicity(m, cc);
            Artifacts a;
            Json doc;
            doc["command"] = "certify";
            doc["model"] = to_string(m.kind);
            doc["seed"] = g.seed;
            doc["domain"] = domain_to_json(m.domain);
            doc["certificate"] = to_json(cert);
            a.files["certificate.json"] = json_text(doc);
            a.summary = Json{{"verdict", to_string(cert.verdict)}, {"status", doc["certificate"]["status"]},
                             {"e_star", point_to_json(cert.condition_i.e_star)},
                             {"alpha", doc["certificate"]["condition_i"]["alpha"]},
                             {"residual", cert.condition_i.residual}};
            a.exit_code = cert.verdict == Verdict::Certified ? 0 : (cert.verdict == Verdict::Partial ? kExitPartial : kExitFailed);
            return a;
        };
    });

    // --------------------------------------------------------------- simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one trajectory; writes trajectory.csv (t,x1..xd,i) and trajectory.json");
    add_model(simulate_cmd);
    std::vector<double> sim_x0;
    int sim_mode = 0;
    SimConfig sc;
    double sim_bound = 0.0;
    std::string sim_integrator = "rk45";
    double sim_step = 1e-3;
    bool sim_oracle = false;
    simulate_cmd->add_option("--x0", sim_x0, "Initial point (default: model-specific start)")->delimiter(',');
    simulate_cmd->add_option("--mode", sim_mode, "Initial mode");
    simulate_cmd->add_option("--T", sc.t_max, "Time horizon");
    simulate_cmd->add_option("--dt-out", sc.dt_out, "Output sampling step (0: jumps only)");
    simulate_cmd->add_option("--rate-bound", sim_bound, "Dominating rate (0: estimate on a grid, x1.2)");
    simulate_cmd->add_option("--integrator", sim_integrator, "rk45 or rk4");
    simulate_cmd->add_option("--step", sim_step, "RK4 step");
    simulate_cmd->add_flag("--oracle", sim_oracle, "Use hazard integration instead of thinning");
    simulate_cmd->callback([&] {
        run = [&] {
            Model m = load(model_path);
            Point x0 = sim_x0.empty() ? default_starts(m.kind).first : to_point(sim_x0, m, "--x0");
            sc.seed = g.seed;
            sc.flow = flow_config(sim_integrator, sim_step, 1e-9, 1e-12);
            if (sim_bound > 0.0) sc.rate_bound = sim_bound;
            Trajectory tr = sim_oracle ? simulate_hazard(m.fields, m.rates, m.domain, x0, sim_mode, sc)
                                       : simulate(m.fields, m.rates, m.domain, x0, sim_mode, sc);
            Artifacts a;
            a.summary = trajectory_summary(tr);
            a.summary["model"] = to_string(m.kind);
            a.summary["simulator"] = sim_oracle ? "hazard" : "thinning";
            a.files["trajectory.csv"] = trajectory_csv(tr);
            a.files["trajectory.json"] = json_text(a.summary);
            return a;
        };
    });

    // --------------------------------------------------------------- tv-decay
    auto* tv = app.add_subcommand("tv-decay", "TV distance between two starts over time; writes tv_decay.csv (t,tv,floor,in_fit) and tv_decay.json");
    add_model(tv);
    TVDecayConfig tc;
    std::string tv_times = "1:20:1";
    std::vector<double> tv_xa, tv_xb;
    int tv_mode_a = 0, tv_mode_b = 1;
    tv->add_option("--times", tv_times, "start:stop:step or comma list");
    tv->add_option("--replicates", tc.replicates, "Runs per start and time")->check(CLI::PositiveNumber);
    tv->add_option("--bins", tc.bins, "Bins per axis")->delimiter(',');
    tv->add_option("--permutations", tc.permutations, "Label permutations for the null TV floor");
    tv->add_option("--xa", tv_xa, "First start (default: model-specific)")->delimiter(',');
    tv->add_option("--xb", tv_xb, "Second start (default: model-specific)")->delimiter(',');
    tv->add_option("--mode-a", tv_mode_a, "Mode of the first start");
    tv->add_option("--mode-b", tv_mode_b, "Mode of the second start");
    tv->callback([&] {
        run = [&] {
            Model m = load(model_path);
            auto [da, db] = default_starts(m.kind);
            Point xa = tv_xa.empty() ? da : to_point(tv_xa, m, "--xa");
            Point xb = tv_xb.empty() ? db : to_point(tv_xb, m, "--xb");
            tc.times = parse_times(tv_times);
            tc.seed = g.seed;
            tc.threads = g.threads;
            TVDecayReport r = tv_decay(m.fields, m.rates, m.domain, xa, tv_mode_a, xb, tv_mode_b, tc);
            Artifacts a;
            a.summary = to_json(r);
            a.summary["xa"] = point_to_json(xa);
            a.summary["xb"] = point_to_json(xb);
            a.summary["seed"] = g.seed;
            a.files["tv_decay.csv"] = tv_decay_csv(r);
            a.files["tv_decay.json"] = json_text(a.summary);
            return a;
        };
    });

    // ----------------------------------------------------------- bracket-scan
    auto* bs = app.add_subcommand("bracket-scan", "Bracket rank on a grid; writes bracket_scan.csv (x1..xd,kind,K,rank,sigma_min_kept) and bracket_scan.json");
    add_model(bs);
    std::string bs_kind = "weak";
    int bs_depth = kDefaultMaxBracketDepth;
    std::vector<int> bs_res{20, 10};
    RankTolerance bs_tol;
    bool bs_fd = false;
    bs->add_option("--kind", bs_kind, "weak or strong");
    bs->add_option("--depth", bs_depth, "Bracket depth K")->check(CLI::Range(0, kMaxJetLevel));
    bs->add_option("--res", bs_res, "Grid points per axis")->delimiter(',');
    bs->add_option("--abs-tol", bs_tol.abs, "Absolute rank tolerance");
    bs->add_option("--rel-tol", bs_tol.rel, "Relative rank tolerance (times sigma_1)");
    bs->add_flag("--fd", bs_fd, "Finite differences instead of jets");
    bs->callback([&] {
        run = [&] {
            Model m = load(model_path);
            FamilyKind kind;
            try {
                kind = family_kind_from_string(bs_kind);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            ScanResult r = scan(m.fields, m.domain, kind, bs_depth, bs_res, bs_tol, g.threads,
                                bs_fd ? DiffMode::FiniteDifference : DiffMode::Auto);
            Artifacts a;
            a.summary = to_json(r);
            a.summary["model"] = to_string(m.kind);
            a.files["bracket_scan.csv"] = scan_csv(r);
            a.files["bracket_scan.json"] = json_text(a.summary);
            return a;
        };
    });

    // ------------------------------------------------------------ equilibrium
    auto* eq = app.add_subcommand("equilibrium", "Search for condition (i); writes equilibrium.json");
    add_model(eq);
    ConditionIOptions eo;
    bool eo_plain = false;
    eq->add_option("--tol-eq", eo.tol_eq, "Residual tolerance");
    eq->add_option("--seed-res", eo.seed_resolution, "Seed grid")->delimiter(',');
    eq->add_option("--iterations", eo.iterations, "Nelder-Mead iterations per stage");
    eq->add_option("--delta0", eo.delta0, "Exclusion radius around the extinction set");
    eq->add_flag("--no-min-alpha", eo_plain, "Keep the first-stage point instead of the smallest |alpha|");
    eq->callback([&] {
        run = [&] {
            Model m = load(model_path);
            eo.minimize_alpha_norm = !eo_plain;
            if (m.has_extinction_set()) {
                eo.extinction_distance = [&m](const Point& x) { return m.extinction_distance(x); };
            }
            EquilibriumCertificate c = find_condition_i(m.fields, m.domain, eo);
            Artifacts a;
            a.summary = to_json(c);
            a.summary["model"] = to_string(m.kind);
            a.files["equilibrium.json"] = json_text(a.summary);
            return a;
        };
    });

    // ------------------------------------------------------------------ reach
    auto* reach = app.add_subcommand("reach", "Reachability of a target from starts; writes reach.json");
    add_model(reach);
    std::vector<double> rc_target;
    std::vector<std::string> rc_from;
    std::vector<int> rc_grid{5, 4};
    double rc_delta = 0.05;
    ReachOptions ro;
    reach->add_option("--target", rc_target, "Target point")->delimiter(',')->required();
    reach->add_option("--from", rc_from, "Start point \"x,y\" (repeatable; default: grid)");
    reach->add_option("--from-grid", rc_grid, "Start grid when --from is absent")->delimiter(',');
    reach->add_option("--delta", rc_delta, "Acceptance radius");
    reach->add_option("--budget", ro.budget, "Tree nodes per start");
    reach->add_option("--tau-max", ro.tau_max, "Maximum leg duration");
    reach->add_option("--goal-bias", ro.goal_bias, "Probability of extending towards a random goal");
    reach->add_option("--target-bias", ro.target_bias, "Probability of extending towards the target");
    reach->callback([&] {
        run = [&] {
            Model m = load(model_path);
            Point target = to_point(rc_target, m, "--target");
            std::vector<Point> starts;
            for (const auto& s : rc_from) starts.push_back(parse_point_text(s, m, "--from"));
            if (starts.empty()) starts = m.domain.sample_grid(rc_grid);
            ro.seed = g.seed;
            auto results = accessible(m.fields, m.domain, target, starts, rc_delta, ro, g.threads);
            Artifacts a;
            Json rs = Json::array();
            std::size_t ok = 0;
            for (const auto& r : results) {
                rs.push_back(to_json(r));
                ok += r.success() ? 1 : 0;
            }
            a.summary["model"] = to_string(m.kind);
            a.summary["target"] = point_to_json(target);
            a.summary["delta"] = rc_delta;
            a.summary["successes"] = ok;
            a.summary["starts"] = results.size();
            a.summary["results"] = std::move(rs);
            a.files["reach.json"] = json_text(a.summary);
            return a;
        };
    });

    // ------------------------------------------------------------- submersion
    auto* sub = app.add_subcommand("submersion", "Rank of the duration map; writes submersion.json");
    add_model(sub);
    std::vector<double> sb_base;
    std::string sb_schedule;
    int sb_terminal = 0;
    double sb_s = 1.0;
    SubmersionOptions so;
    sub->add_option("--base", sb_base, "Base point")->delimiter(',')->required();
    sub->add_option("--schedule", sb_schedule, "Check this schedule, JSON [[index, duration], ...], instead of searching");
    sub->add_option("--terminal", sb_terminal, "Terminal field index (with --schedule)");
    sub->add_option("--s", sb_s, "Total time (with --schedule)");
    sub->add_option("--budget", so.budget, "Random schedules tried");
    sub->add_option("--m-min", so.m_min, "Shortest schedule");
    sub->add_option("--m-max", so.m_max, "Longest schedule");
    sub->add_option("--s-min", so.s_min, "Smallest total time");
    sub->add_option("--s-max", so.s_max, "Largest total time");
    sub->add_option("--min-sigma", so.min_sigma, "Smallest accepted kept singular value");
    sub->callback([&] {
        run = [&] {
            Model m = load(model_path);
            Point base = to_point(sb_base, m, "--base");
            SubmersionCertificate c;
            if (!sb_schedule.empty()) {
                SwitchSchedule s;
                try {
                    s = schedule_from_json(Json::parse(sb_schedule));
                } catch (const std::exception& e) {
                    throw UsageError(std::string("--schedule: ") + e.what());
                }
                c = check_submersion(m.fields, base, s, sb_terminal, sb_s, so.flow, so.tol);
            } else {
                so.seed = g.seed;
                c = find_submersion(m.fields, base, so);
            }
            Artifacts a;
            a.summary = to_json(c);
            a.summary["model"] = to_string(m.kind);
            a.files["submersion.json"] = json_text(a.summary);
            return a;
        };
    });

    // --------------------------------------------------------------- invasion
    auto* inv = app.add_subcommand("invasion", "Invasion rates of a Lotka-Volterra model; writes invasion.json");
    add_model(inv);
    std::string inv_face = "both";
    InvasionConfig ic;
    inv->add_option("--face", inv_face, "x, y or both");
    inv->add_option("--T", ic.t_max, "Time horizon of the boundary process");
    inv->add_option("--burn-in", ic.burn_in, "Discarded initial time");
    inv->add_option("--dt-out", ic.dt_out, "Averaging sample step");
    inv->callback([&] {
        run = [&] {
            Model m = load(model_path);
            require_kind(m, ModelKind::LV, "invasion");
            if (inv_face != "x" && inv_face != "y" && inv_face != "both") throw UsageError("--face must be x, y or both");
            const auto& lv = std::get<LVParams>(m.params);
            Artifacts a;
            a.summary["model"] = "lv";
            a.summary["seed"] = g.seed;
            Json rates = Json::array();
            for (Face f : {Face::X, Face::Y}) {
                if (inv_face != "both" && (inv_face == "x") != (f == Face::X)) continue;
                InvasionConfig c = ic;
                c.seed = derive_seed(g.seed, f == Face::X ? 0 : 1);
                rates.push_back(to_json(invasion_rate(lv, m.rates, f, c)));
            }
            a.summary["rates"] = std::move(rates);
            a.files["invasion.json"] = json_text(a.summary);
            return a;
        };
    });

    // ----------------------------------------------------------- sis-spectrum
    auto* sis = app.add_subcommand("sis-spectrum", "lambda(A^s) over s and the equilibria; writes sis_spectrum.csv (s,lambda) and sis_spectrum.json");
    add_model(sis);
    int sis_points = 101;
    sis->add_option("--points", sis_points, "Grid points on [0, 1]")->check(CLI::Range(2, 1000000));
    sis->callback([&] {
        run = [&] {
            Model m = load(model_path);
            require_kind(m, ModelKind::SIS, "sis-spectrum");
            const auto& p = std::get<SISParams>(m.params);
            std::vector<double> grid(static_cast<std::size_t>(sis_points));
            for (int k = 0; k < sis_points; ++k) grid[static_cast<std::size_t>(k)] = static_cast<double>(k) / (sis_points - 1);
            SISLambdaCurve curve = sis_lambda_curve(p, grid);
            Artifacts a;
            a.summary = to_json(curve);
            a.summary["equilibrium_env0"] = to_json(sis_equilibrium(p, 0.0));
            a.summary["equilibrium_env1"] = to_json(sis_equilibrium(p, 1.0));
            a.summary["equilibrium_at_argmax"] = to_json(sis_equilibrium(p, curve.argmax_s));
            a.files["sis_spectrum.csv"] = sis_curve_csv(curve);
            a.files["sis_spectrum.json"] = json_text(a.summary);
            return a;
        };
    });

    // ------------------------------------------------------------ lv-classify
    auto* lvc = app.add_subcommand("lv-classify", "Regimes of the averaged Lotka-Volterra field; writes lv_classify.json");
    add_model(lvc);
    std::vector<double> lvc_s{0.5};
    lvc->add_option("--s", lvc_s, "Averaging weights to classify")->delimiter(',');
    lvc->callback([&] {
        run = [&] {
            Model m = load(model_path);
            require_kind(m, ModelKind::LV, "lv-classify");
            const auto& lv = std::get<LVParams>(m.params);
            Artifacts a;
            a.summary["intervals"] = to_json(lv_intervals(lv));
            Json cls = Json::array();
            for (double s : lvc_s) {
                if (!(s >= 0.0 && s <= 1.0)) throw UsageError("--s values must lie in [0, 1]");
                cls.push_back(to_json(lv_classify(lv, s)));
            }
            a.summary["classifications"] = std::move(cls);
            a.files["lv_classify.json"] = json_text(a.summary);
            return a;
        };
    });

    std::string command_line;
    for (int k = 0; k < argc; ++k) command_line += (k ? " " : "") + std::string(argv[k]);
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&](int code) {
        write_log(g.out, command_line, code, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        return code;
    };
    auto diagnose = [&](int code, const char* kind, const std::string& message) {
        Json d{{"error", kind}, {"message", message}, {"exit_code", code}};
        std::cerr << json_text(d);
        if (code == kExitModule) {
            try {
                write_file_atomic(fs::path(g.out) / "error.json", json_text(d));
            } catch (const std::exception&) {
            }
        }
        return finish(code);
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return diagnose(kExitUsage, "usage", e.what());
    }

    try {
        Artifacts a = run();
        emit(a, g);
        return finish(a.exit_code);
    } catch (const UsageError& e) {
        return diagnose(kExitUsage, "usage", e.what());
    } catch (const IoError& e) {
        return diagnose(kExitUsage, "input", e.what());
    } catch (const ModelError& e) {
        return diagnose(kExitModule, "model", e.what());
    } catch (const NumericalError& e) {
        return diagnose(kExitModule, "numerical", e.what());
    } catch (const std::exception& e) {
        return diagnose(kExitModule, "internal", e.what());
    }
}
