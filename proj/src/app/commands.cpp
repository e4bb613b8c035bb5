#include "fes/app/commands.hpp"

#include "fes/io/csv.hpp"
#include "fes/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace fes::app {

namespace fs = std::filesystem;
using namespace fes::scenarios;

ClosedLoopConfig Instance::loop_config() const {
    ClosedLoopConfig c;
    c.tau = tau;
    c.eps = eps;
    c.horizon = horizon;
    c.substeps = substeps;
    c.u0 = u0;
    c.x0 = x0;
    c.log_intersample = log_intersample;
    return c;
}

Instrumentation Instance::instrumentation(const SolutionOracle& oracle) const {
    Instrumentation in;
    in.oracle = oracle;
    in.lyapunov = V;
    in.bundle = &bundle;
    return in;
}

Instance make_instance(const RunConfig& cfg) {
    Instance in;
    in.kind = cfg.scenario;
    in.substeps = cfg.substeps;
    in.log_intersample = cfg.log_intersample;
    switch (cfg.scenario) {
        case ScenarioKind::Building: {
            BuildingScenario s = cfg.building;
            if (cfg.tau) s.tau = *cfg.tau;
            if (cfg.eps) s.eps = *cfg.eps;
            if (cfg.seed) s.seed = *cfg.seed;
            BuildingSetup b = build_building(s);
            in.plant = b.plant;
            in.problem = b.problem;
            in.op = b.op;
            in.bundle = b.bundle;
            in.V = b.V;
            in.w = b.w;
            in.oracle_gamma = b.step_gamma;
            in.tau = s.tau;
            in.eps = s.eps;
            in.horizon = cfg.horizon ? *cfg.horizon : s.horizon_samples();
            in.x0 = b.x0;
            in.u0 = b.u0;
            in.building = std::move(b);
            break;
        }
        case ScenarioKind::Robots: {
            RobotScenario s = cfg.robots;
            if (cfg.tau) s.tau = *cfg.tau;
            if (cfg.eps) s.eps = *cfg.eps;
            RobotSetup r = build_robots(s);
            in.plant = r.plant;
            in.problem = r.problem;
            in.op = r.op;
            in.bundle = r.bundle;
            in.w = r.w;
            in.oracle_gamma = r.oracle_gamma;
            in.tau = s.tau;
            in.eps = s.eps;
            in.horizon = cfg.horizon ? *cfg.horizon : cfg.robots_horizon;
            in.x0 = r.x0;
            in.u0 = r.u0;
            break;
        }
        case ScenarioKind::Custom: {
            const CustomScenario& c = cfg.custom;
            LtiScenario s = build_lti_scenario(c.sys, c.cost, c.step_gamma);
            in.plant = s.plant;
            in.problem = s.problem;
            in.op = s.op;
            in.bundle = s.bundle;
            in.V = s.V;
            in.oracle_gamma = s.step_gamma;
            in.w = c.disturbance_sinusoid ? DisturbanceSignal::sinusoid(c.w_offset, c.w_amplitude, c.w_omega, c.w_phase)
                                          : DisturbanceSignal::constant(c.w_offset);
            if (!cfg.tau) throw Error(ErrorCode::ConfigError, "custom scenario needs run.tau");
            in.tau = *cfg.tau;
            in.eps = cfg.eps.value_or(1.0);
            in.horizon = cfg.horizon ? *cfg.horizon : cfg.custom_horizon;
            if (in.horizon < 1) throw Error(ErrorCode::ConfigError, "custom scenario needs a horizon");
            in.x0 = c.x0.size() ? c.x0 : Vec::Zero(c.sys.n_x());
            in.u0 = c.u0.size() ? c.u0 : Vec::Zero(c.sys.n_u());
            break;
        }
    }
    in.loop_config().validate(in.plant);
    return in;
}

int sweep_workers() {
    if (const char* env = std::getenv("FES_LAB_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

namespace {

void write_file(const fs::path& p, const std::string& content) { io::write_text_file(p.string(), content); }

fs::path prepare_output(const RunConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::ConfigError, "cannot create output directory " + dir.string());
    return dir;
}

std::vector<double> column(const TrajectoryLog& log, const std::function<double(const SampleRecord&)>& f) {
    std::vector<double> v;
    v.reserve(log.samples.size());
    for (const auto& s : log.samples) v.push_back(f(s));
    return v;
}

double vnorm(const Vec& v) { return v.size() ? v.norm() : std::numeric_limits<double>::quiet_NaN(); }

io::LinePlot error_plot(const TrajectoryLog& log, const std::string& title) {
    io::LinePlot p;
    p.title = title;
    p.x_label = "sample k";
    p.y_label = "distance to equilibrium";
    p.log_y = true;
    const auto k = column(log, [](const SampleRecord& s) { return static_cast<double>(s.k); });
    p.series.push_back({"|du|", k, column(log, [](const SampleRecord& s) { return vnorm(s.du); }), "", false, false});
    p.series.push_back({"|dy|", k, column(log, [](const SampleRecord& s) { return vnorm(s.dy); }), "", false, false});
    if (std::any_of(log.samples.begin(), log.samples.end(), [](const SampleRecord& s) { return std::isfinite(s.envelope); })) {
        p.series.push_back({"ISS envelope", k, column(log, [](const SampleRecord& s) { return s.envelope; }), "#555", false, true});
    }
    return p;
}

io::LinePlot input_plot(const TrajectoryLog& log, double time_scale, const std::string& x_label,
                        const std::vector<std::string>& names) {
    io::LinePlot p;
    p.title = "Inputs";
    p.x_label = x_label;
    p.y_label = "u";
    const auto t = column(log, [time_scale](const SampleRecord& s) { return s.t * time_scale; });
    for (int i = 0; i < log.n_u; ++i) {
        const std::string name = i < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(i)] : "u" + std::to_string(i);
        p.series.push_back({name, t, column(log, [i](const SampleRecord& s) { return s.u[i]; }), "", false, false});
    }
    return p;
}

io::LinePlot room_plot(const std::vector<std::pair<std::string, const TrajectoryLog*>>& logs, const BuildingScenario& s,
                       const std::string& title) {
    io::LinePlot p;
    p.title = title;
    p.x_label = "time [h]";
    p.y_label = "temperature [C]";
    p.band = io::Band{s.comfort_min, s.comfort_max, "comfort band"};
    for (const auto& [tag, log] : logs) {
        const auto t = column(*log, [](const SampleRecord& r) { return r.t; });
        for (int i = 0; i < s.rooms; ++i) {
            io::Series ser;
            ser.name = (tag.empty() ? "" : tag + " ") + "room " + std::to_string(i + 1);
            ser.x = t;
            ser.y = column(*log, [i](const SampleRecord& r) { return r.y[i]; });
            ser.dashed = tag == "thermostat";
            p.series.push_back(std::move(ser));
        }
        io::Series amb;
        amb.name = tag.empty() ? "ambient" : "";
        amb.x = t;
        amb.y = column(*log, [&s](const SampleRecord& r) { return r.y[s.rooms]; });
        amb.color = "#999";
        amb.dashed = true;
        if (tag.empty() || tag == logs.front().first) p.series.push_back(std::move(amb));
    }
    return p;
}

io::LinePlot plane_plot(const TrajectoryLog& log, const RobotScenario& s) {
    io::LinePlot p;
    p.title = "Robot trajectories";
    p.x_label = "a";
    p.y_label = "b";
    p.equal_aspect = true;
    for (int i = 0; i < s.agents(); ++i) {
        io::Series path;
        path.name = "robot " + std::to_string(i + 1);
        if (log.dense.empty()) {
            path.x = column(log, [i](const SampleRecord& r) { return r.x[3 * i]; });
            path.y = column(log, [i](const SampleRecord& r) { return r.x[3 * i + 1]; });
        } else {
            for (const auto& d : log.dense) {
                path.x.push_back(d.x[3 * i]);
                path.y.push_back(d.x[3 * i + 1]);
            }
        }
        p.series.push_back(std::move(path));
    }
    io::Series targets{"targets", {}, {}, "#000", true, false};
    io::Series eq{"final commands", {}, {}, "#d62728", true, false};
    const Vec& u_end = log.samples.back().u;
    for (int i = 0; i < s.agents(); ++i) {
        targets.x.push_back(s.targets[static_cast<std::size_t>(i)].x());
        targets.y.push_back(s.targets[static_cast<std::size_t>(i)].y());
        eq.x.push_back(u_end[2 * i]);
        eq.y.push_back(u_end[2 * i + 1]);
    }
    p.series.push_back(std::move(targets));
    p.series.push_back(std::move(eq));
    return p;
}

std::vector<std::string> building_input_names(int rooms) {
    std::vector<std::string> n;
    for (int i = 0; i < rooms; ++i) n.push_back("radiator " + std::to_string(i + 1));
    n.insert(n.end(), {"air flow", "AHU heat", "AHU cool"});
    return n;
}

std::string pct(double base, double v) {
    if (base == 0.0) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << 100.0 * (base - v) / base << '%';
    return os.str();
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Instance in;
    try {
        in = make_instance(cfg);
    } catch (const Error& e) {
        err << "config: " << e.what() << '\n';
        return kConfigFailure;
    }
    const auto oracle = make_offline_oracle(in.plant, in.problem, in.oracle_gamma);
    TrajectoryLog log;
    try {
        log = run_sampled_data(in.plant, in.op, in.w, in.loop_config(), in.instrumentation(oracle));
    } catch (const IntegrationDiverged& e) {
        err << "diverged at sample " << e.sample() << ": " << e.detail() << '\n';
        return kDiverged;
    }

    const fs::path dir = prepare_output(cfg);
    write_file(dir / "trajectory.csv", log.to_csv());

    const auto region = certify(in.bundle, in.tau, in.eps);
    const auto& last = log.samples.back();
    out << "scenario: " << to_string(in.kind) << '\n'
        << "samples: " << in.horizon << " (tau = " << io::format_double(in.tau) << ", eps = " << io::format_double(in.eps)
        << ")\n"
        << "certificate: " << to_string(region.verdict) << " (rho = " << io::format_double(region.rho) << ")\n"
        << "final |du|: " << io::format_double(vnorm(last.du)) << '\n'
        << "final |dy|: " << io::format_double(vnorm(last.dy)) << '\n';
    if (in.building) {
        const auto m = evaluate_building(log, cfg.building);
        out << "total cost: " << io::format_double(m.total_cost) << '\n'
            << "violation time [room-h]: " << io::format_double(m.violation_hours) << '\n';
    }
    out << "wrote " << (dir / "trajectory.csv").string() << '\n';

    if (cfg.plot) {
        write_file(dir / "errors.svg", error_plot(log, "Distance to the moving equilibrium").render());
        if (in.kind == ScenarioKind::Building) {
            BuildingScenario s = cfg.building;
            write_file(dir / "rooms.svg", room_plot({{"", &log}}, s, "Room temperatures under feedback optimization").render());
            write_file(dir / "inputs.svg", input_plot(log, 1.0, "time [h]", building_input_names(s.rooms)).render());
        } else if (in.kind == ScenarioKind::Robots) {
            write_file(dir / "plane.svg", plane_plot(log, cfg.robots).render(760, 560));
            write_file(dir / "inputs.svg", input_plot(log, 1.0, "time", {}).render());
        } else {
            write_file(dir / "inputs.svg", input_plot(log, 1.0, "time", {}).render());
        }
    }
    return kOk;
}

int cmd_certify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Instance in;
    try {
        in = make_instance(cfg);
        in.bundle.validate();
    } catch (const Error& e) {
        err << "config: " << e.what() << '\n';
        return kConfigFailure;
    }
    const auto r = certify(in.bundle, in.tau, in.eps);
    const auto f = [](double v) { return io::format_double(v); };
    out << "scenario: " << to_string(in.kind) << '\n'
        << "tau: " << f(in.tau) << '\n'
        << "eps: " << f(in.eps) << '\n'
        << "tau_min: " << f(r.tau_min) << '\n'
        << "eps_max: " << f(r.eps_max) << '\n'
        << "eps_admissible: " << f(r.eps_admissible) << '\n'
        << "c_W: " << f(r.c_W) << '\n'
        << "M11: " << f(r.M(0, 0)) << '\n'
        << "M12: " << f(r.M(0, 1)) << '\n'
        << "M21: " << f(r.M(1, 0)) << '\n'
        << "M22: " << f(r.M(1, 1)) << '\n'
        << "rho: " << f(r.rho) << '\n'
        << "verdict: " << to_string(r.verdict) << '\n';
    return r.certified() ? kOk : kNotCertified;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Instance in;
    try {
        in = make_instance(cfg);
        if (cfg.sweep.tau.empty() || cfg.sweep.eps.empty()) throw Error(ErrorCode::ConfigError, "sweep needs tau and eps grids");
        for (double t : cfg.sweep.tau) {
            if (!(t > 0.0)) throw Error(ErrorCode::ConfigError, "sweep tau values must be positive");
        }
        for (double e : cfg.sweep.eps) {
            if (!(e > 0.0 && e <= 1.0)) throw Error(ErrorCode::ConfigError, "sweep eps values must lie in (0, 1]");
        }
    } catch (const Error& e) {
        err << "config: " << e.what() << '\n';
        return kConfigFailure;
    }
    const int workers = sweep_workers();
    const auto pts = sweep_region(in.bundle, cfg.sweep.tau, cfg.sweep.eps, workers);

    std::vector<char> diverged;
    if (cfg.sweep.simulate) {
        diverged.assign(pts.size(), 0);
        std::vector<std::thread> pool;
        std::mutex err_mu;
        const auto oracle = make_offline_oracle(in.plant, in.problem, in.oracle_gamma);
        auto run_point = [&](std::size_t idx) {
            ClosedLoopConfig c = in.loop_config();
            c.tau = pts[idx].tau;
            c.eps = pts[idx].eps;
            c.log_intersample = false;
            Instrumentation instr;
            instr.oracle = oracle;
            try {
                const auto log = run_sampled_data(in.plant, in.op, in.w, c, instr);
                const double d0 = log.samples.front().du.norm(), d1 = log.samples.back().du.norm();
                diverged[idx] = !std::isfinite(d1) || d1 > cfg.sweep.divergence_ratio * std::max(1.0, d0);
            } catch (const IntegrationDiverged&) {
                diverged[idx] = 1;
            } catch (const Error& e) {
                std::lock_guard lock(err_mu);
                err << "sweep point tau=" << pts[idx].tau << " eps=" << pts[idx].eps << ": " << e.what() << '\n';
                diverged[idx] = 1;
            }
        };
        const int n = std::min<int>(workers, static_cast<int>(pts.size()));
        for (int t = 0; t < n; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t i = static_cast<std::size_t>(t); i < pts.size(); i += static_cast<std::size_t>(n)) run_point(i);
            });
        }
        for (auto& th : pool) th.join();
    }

    std::ostringstream csv;
    io::CsvWriter w(csv);
    std::vector<std::string> head{"tau", "eps", "rho_M", "certified"};
    if (cfg.sweep.simulate) head.push_back("diverged");
    w.header(head);
    std::size_t n_cert = 0, n_div = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        w.field(pts[i].tau);
        w.field(pts[i].eps);
        w.field(pts[i].rho);
        w.field(pts[i].certified ? 1 : 0);
        if (cfg.sweep.simulate) w.field(diverged[i] ? 1 : 0);
        w.end_row();
        n_cert += pts[i].certified;
        if (cfg.sweep.simulate) n_div += static_cast<std::size_t>(diverged[i]);
    }
    const fs::path dir = prepare_output(cfg);
    write_file(dir / "sweep.csv", csv.str());

    io::RegionMap map;
    map.title = std::string("Certified region, ") + to_string(in.kind);
    map.tau = cfg.sweep.tau;
    map.eps = cfg.sweep.eps;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        map.rho.push_back(pts[i].rho);
        map.certified.push_back(pts[i].certified);
        if (cfg.sweep.simulate) map.diverged.push_back(diverged[i] != 0);
    }
    write_file(dir / "sweep.svg", map.render());

    out << "grid: " << cfg.sweep.tau.size() << " x " << cfg.sweep.eps.size() << '\n'
        << "certified points: " << n_cert << '\n';
    if (cfg.sweep.simulate) out << "diverged runs: " << n_div << '\n';
    out << "wrote " << (dir / "sweep.csv").string() << '\n';
    return kOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.scenario != ScenarioKind::Building) {
        err << "config: compare needs the building scenario\n";
        return kConfigFailure;
    }
    Instance in;
    try {
        in = make_instance(cfg);
    } catch (const Error& e) {
        err << "config: " << e.what() << '\n';
        return kConfigFailure;
    }
    BuildingScenario s = cfg.building;
    if (cfg.tau) s.tau = *cfg.tau;
    const BuildingSetup& b = *in.building;
    const auto loop = in.loop_config();
    const auto oracle = make_offline_oracle(in.plant, in.problem, in.oracle_gamma);
    TrajectoryLog fo, th, ff;
    try {
        fo = run_sampled_data(in.plant, in.op, in.w, loop, in.instrumentation(oracle));
        th = run_policy(in.plant, thermostat_policy(s), in.w, loop);
        ff = run_feedforward_baseline(in.plant, oracle, b.w_measured, in.w, loop);
    } catch (const IntegrationDiverged& e) {
        err << "diverged at sample " << e.sample() << ": " << e.detail() << '\n';
        return kDiverged;
    }
    const auto mf = evaluate_building(fo, s), mt = evaluate_building(th, s), mff = evaluate_building(ff, s);

    std::ostringstream csv;
    io::CsvWriter w(csv);
    w.header({"controller", "total_cost", "energy_cost", "comfort_cost", "violation_hours", "degree_hours", "heat_kwh"});
    for (const auto& [name, m] : {std::pair{"feedback_optimization", mf}, {"thermostat", mt}, {"feedforward", mff}}) {
        w.field(std::string_view(name));
        w.field(m.total_cost);
        w.field(m.energy_cost);
        w.field(m.comfort_cost);
        w.field(m.violation_hours);
        w.field(m.degree_hours);
        w.field(m.heat_kwh);
        w.end_row();
    }
    const fs::path dir = prepare_output(cfg);
    write_file(dir / "compare.csv", csv.str());
    write_file(dir / "fo.csv", fo.to_csv());
    write_file(dir / "thermostat.csv", th.to_csv());
    write_file(dir / "feedforward.csv", ff.to_csv());

    out << std::left << std::setw(24) << "controller" << std::setw(14) << "total cost" << "violation [room-h]\n";
    for (const auto& [name, m] : {std::pair{"feedback optimization", mf}, {"thermostat", mt}, {"feedforward", mff}}) {
        out << std::setw(24) << name << std::setw(14) << io::format_double(std::round(m.total_cost * 1e4) / 1e4)
            << io::format_double(std::round(m.violation_hours * 1e4) / 1e4) << '\n';
    }
    out << "cost reduction vs thermostat: " << pct(mt.total_cost, mf.total_cost) << '\n'
        << "violation reduction vs thermostat: " << pct(mt.violation_hours, mf.violation_hours) << '\n'
        << "wrote " << (dir / "compare.csv").string() << '\n';

    if (cfg.plot) {
        write_file(dir / "compare_rooms.svg",
                   room_plot({{"FO", &fo}, {"thermostat", &th}}, s, "Feedback optimization vs thermostat").render(900, 480));
        write_file(dir / "rooms.svg", room_plot({{"", &fo}}, s, "Room temperatures under feedback optimization").render());
        write_file(dir / "inputs.svg", input_plot(fo, 1.0, "time [h]", building_input_names(s.rooms)).render());
    }
    return kOk;
}

}  // namespace fes::app
