#include "fes/app/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fes::app {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

/// Object reader that remembers which keys were consumed.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_ + ": expected an object");
    }

    [[nodiscard]] const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    void get(const std::string& key, double& out) {
        if (auto* v = find(key)) out = number(*v, key);
    }
    void get(const std::string& key, std::optional<double>& out) {
        if (auto* v = find(key)) out = number(*v, key);
    }
    void get(const std::string& key, int& out) { out = static_cast<int>(integer(key, out)); }
    void get(const std::string& key, long& out) { out = integer(key, out); }
    void get(const std::string& key, std::optional<long>& out) {
        if (find(key)) out = integer(key, 0);
    }
    void get(const std::string& key, std::uint64_t& out) { out = static_cast<std::uint64_t>(integer(key, static_cast<long>(out))); }
    void get(const std::string& key, bool& out) {
        if (auto* v = find(key)) {
            if (!v->is_boolean()) fail(where(key) + ": expected true or false");
            out = v->get<bool>();
        }
    }
    void get(const std::string& key, std::string& out) {
        if (auto* v = find(key)) {
            if (!v->is_string()) fail(where(key) + ": expected a string");
            out = v->get<std::string>();
        }
    }
    void get(const std::string& key, std::vector<double>& out) {
        if (auto* v = find(key)) out = numbers(*v, key);
    }
    void get(const std::string& key, Vec& out) {
        if (auto* v = find(key)) {
            const auto xs = numbers(*v, key);
            out = Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
        }
    }
    void get(const std::string& key, Mat& out) {
        auto* v = find(key);
        if (!v) return;
        if (!v->is_array()) fail(where(key) + ": expected an array of rows");
        const auto rows = static_cast<Eigen::Index>(v->size());
        Eigen::Index cols = -1;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto row = numbers((*v)[static_cast<std::size_t>(r)], key);
            if (cols < 0) {
                cols = static_cast<Eigen::Index>(row.size());
                out.resize(rows, cols);
            }
            if (static_cast<Eigen::Index>(row.size()) != cols) fail(where(key) + ": ragged matrix");
            for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = row[static_cast<std::size_t>(c)];
        }
        if (rows == 0) out.resize(0, 0);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) fail(where(it.key()) + ": unknown key");
        }
    }

    [[nodiscard]] std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    double number(const json& v, const std::string& key) const {
        if (!v.is_number()) fail(where(key) + ": expected a number");
        return v.get<double>();
    }
    long integer(const std::string& key, long fallback) {
        auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) fail(where(key) + ": expected an integer");
        return v->get<long>();
    }
    std::vector<double> numbers(const json& v, const std::string& key) const {
        if (!v.is_array()) fail(where(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) out.push_back(number(e, key));
        return out;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> read_grid(Obj& parent, const std::string& key) {
    const json* v = parent.find(key);
    if (!v) return {};
    if (v->is_array()) {
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) fail(parent.where(key) + ": expected numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    Obj g(*v, parent.where(key));
    double from = 0.0, to = 0.0;
    int count = 0;
    bool log_spaced = false;
    g.get("from", from);
    g.get("to", to);
    g.get("count", count);
    g.get("log", log_spaced);
    g.finish();
    return make_grid(from, to, count, log_spaced);
}

void read_schedule(const json& j, scenarios::WorkdaySchedule& s) {
    Obj o(j, "building.schedule");
    o.get("arrive", s.arrive);
    o.get("leave", s.leave);
    o.get("lunch_start", s.lunch_start);
    o.get("lunch_end", s.lunch_end);
    o.get("step_hours", s.step_hours);
    o.get("p_arrive", s.p_arrive);
    o.get("p_move", s.p_move);
    o.get("p_break", s.p_break);
    o.get("home_bias", s.home_bias);
    o.finish();
}

void read_building(const json& j, scenarios::BuildingScenario& b) {
    Obj o(j, "building");
    o.get("rooms", b.rooms);
    o.get("wall_layers", b.wall_layers);
    o.get("room_capacity", b.room_capacity);
    o.get("wall_capacity", b.wall_capacity);
    o.get("g_room_wall", b.g_room_wall);
    o.get("g_wall_wall", b.g_wall_wall);
    o.get("g_wall_out", b.g_wall_out);
    o.get("g_window", b.g_window);
    o.get("g_floor", b.g_floor);
    o.get("g_room_room", b.g_room_room);
    o.get("radiator_area", b.radiator_area);
    o.get("radiator_max", b.radiator_max);
    o.get("airflow_max", b.airflow_max);
    o.get("ahu_heat_max", b.ahu_heat_max);
    o.get("ahu_cool_max", b.ahu_cool_max);
    o.get("air_cp", b.air_cp);
    o.get("solar_aperture", b.solar_aperture);
    o.get("solar_peak", b.solar_peak);
    o.get("ambient_mean", b.ambient_mean);
    o.get("ambient_amplitude", b.ambient_amplitude);
    o.get("ambient_peak_hour", b.ambient_peak_hour);
    o.get("ground_temperature", b.ground_temperature);
    o.get("occupants", b.occupants);
    o.get("occupant_watts", b.occupant_watts);
    o.get("occupancy_ramp_hours", b.occupancy_ramp_hours);
    if (const json* s = o.find("schedule")) read_schedule(*s, b.schedule);
    o.get("comfort_min", b.comfort_min);
    o.get("comfort_max", b.comfort_max);
    o.get("comfort_backoff", b.comfort_backoff);
    o.get("energy_H", b.energy_H);
    o.get("energy_c", b.energy_c);
    o.get("eta", b.eta);
    o.get("nominal_airflow", b.nominal_airflow);
    o.get("nominal_delta_t", b.nominal_delta_t);
    o.get("initial_temperature", b.initial_temperature);
    o.get("horizon_hours", b.horizon_hours);
    o.get("step_gamma", b.step_gamma);
    o.finish();
}

std::vector<Eigen::Vector2d> read_points(Obj& o, const std::string& key) {
    Mat m;
    o.get(key, m);
    if (m.size() == 0) return {};
    if (m.cols() != 2) fail(o.where(key) + ": expected [x, y] pairs");
    std::vector<Eigen::Vector2d> out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.emplace_back(m(r, 0), m(r, 1));
    return out;
}

void read_robots(const json& j, RunConfig& cfg) {
    auto& r = cfg.robots;
    Obj o(j, "robots");
    if (o.find("targets")) r.targets = read_points(o, "targets");
    o.get("k1", r.k1);
    o.get("k2", r.k2);
    o.get("coupling", r.coupling);
    Vec lo, hi;
    o.get("box_lower", lo);
    o.get("box_upper", hi);
    if (lo.size()) {
        if (lo.size() != 2) fail("robots.box_lower: expected two numbers");
        r.box_lower = lo;
    }
    if (hi.size()) {
        if (hi.size() != 2) fail("robots.box_upper: expected two numbers");
        r.box_upper = hi;
    }
    if (o.find("start_positions")) r.start_positions = read_points(o, "start_positions");
    o.get("start_headings", r.start_headings);
    o.get("horizon", cfg.robots_horizon);
    o.finish();
}

BoxSet read_box(Obj& o, const std::string& lo_key, const std::string& hi_key, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    Vec lo = Vec::Constant(n, -inf), hi = Vec::Constant(n, inf);
    o.get(lo_key, lo);
    o.get(hi_key, hi);
    if (lo.size() != n || hi.size() != n) fail(o.where(lo_key) + ": bound sizes do not match");
    return BoxSet(lo, hi);
}

void read_custom(const json& j, RunConfig& cfg) {
    auto& c = cfg.custom;
    Obj o(j, "custom");
    o.get("cap", c.sys.cap);
    o.get("L", c.sys.L);
    o.get("B", c.sys.B);
    o.get("E", c.sys.E);
    o.get("C", c.sys.Cout);
    if (c.sys.L.rows() == 0 || c.sys.B.size() == 0 || c.sys.Cout.size() == 0) fail("custom: L, B and C are required");
    const int n = static_cast<int>(c.sys.L.rows());
    if (c.sys.cap.size() == 0) c.sys.cap = Vec::Ones(n);
    if (c.sys.E.size() == 0) c.sys.E = Mat::Zero(n, 1);
    c.sys.input_box = read_box(o, "u_min", "u_max", static_cast<int>(c.sys.B.cols()));
    c.sys.disturbance_box = read_box(o, "w_min", "w_max", static_cast<int>(c.sys.E.cols()));

    const int nu = static_cast<int>(c.sys.B.cols()), ny = static_cast<int>(c.sys.Cout.rows());
    c.cost.H = Mat::Identity(nu, nu);
    c.cost.q = Vec::Zero(nu);
    c.cost.R = Mat::Identity(ny, ny);
    c.cost.y_ref = Vec::Zero(ny);
    if (const json* cj = o.find("cost")) {
        Obj co(*cj, "custom.cost");
        co.get("H", c.cost.H);
        co.get("q", c.cost.q);
        co.get("R", c.cost.R);
        co.get("y_ref", c.cost.y_ref);
        co.finish();
    }
    o.get("step_gamma", c.step_gamma);

    const int nw = static_cast<int>(c.sys.E.cols());
    c.w_offset = Vec::Zero(nw);
    if (const json* dj = o.find("disturbance")) {
        Obj d(*dj, "custom.disturbance");
        std::string kind = "constant";
        d.get("kind", kind);
        if (kind == "constant") {
            d.get("value", c.w_offset);
        } else if (kind == "sinusoid") {
            c.disturbance_sinusoid = true;
            c.w_amplitude = Vec::Zero(nw);
            c.w_omega = Vec::Zero(nw);
            c.w_phase = Vec::Zero(nw);
            d.get("offset", c.w_offset);
            d.get("amplitude", c.w_amplitude);
            d.get("omega", c.w_omega);
            d.get("phase", c.w_phase);
        } else {
            fail("custom.disturbance.kind: expected \"constant\" or \"sinusoid\"");
        }
        d.finish();
    }
    o.get("x0", c.x0);
    o.get("u0", c.u0);
    o.get("horizon", cfg.custom_horizon);
    o.finish();
    try {
        c.sys.validate();
    } catch (const Error& e) {
        fail("custom: " + e.detail());
    }
}

}  // namespace

const char* to_string(ScenarioKind kind) noexcept {
    switch (kind) {
        case ScenarioKind::Building: return "building";
        case ScenarioKind::Robots: return "robots";
        case ScenarioKind::Custom: return "custom";
    }
    return "?";
}

std::vector<double> make_grid(double from, double to, int count, bool log_spaced) {
    if (count < 1) fail("grid count must be at least 1");
    if (!std::isfinite(from) || !std::isfinite(to)) fail("grid bounds must be finite");
    if (log_spaced && !(from > 0.0 && to > 0.0)) fail("log grid needs positive bounds");
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        g[static_cast<std::size_t>(i)] =
            log_spaced ? std::exp(std::log(from) + s * (std::log(to) - std::log(from))) : from + s * (to - from);
    }
    return g;
}

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what());
    }
    RunConfig cfg;
    Obj root(doc, "");
    const json* ver = root.find("schema_version");
    if (!ver || !ver->is_number_integer()) fail("schema_version is required");
    if (ver->get<int>() != kSchemaVersion) fail("unsupported schema_version " + ver->dump());

    std::string kind;
    root.get("scenario", kind);
    if (kind == "building") {
        cfg.scenario = ScenarioKind::Building;
    } else if (kind == "robots") {
        cfg.scenario = ScenarioKind::Robots;
    } else if (kind == "custom") {
        cfg.scenario = ScenarioKind::Custom;
    } else {
        fail("scenario must be one of building, robots, custom");
    }

    if (const json* r = root.find("run")) {
        Obj run(*r, "run");
        run.get("tau", cfg.tau);
        run.get("eps", cfg.eps);
        run.get("horizon", cfg.horizon);
        run.get("substeps", cfg.substeps);
        if (run.find("seed")) {
            std::uint64_t s = 0;
            run.get("seed", s);
            cfg.seed = s;
        }
        run.get("log_intersample", cfg.log_intersample);
        run.finish();
    }
    if (const json* o = root.find("output")) {
        Obj out(*o, "output");
        out.get("dir", cfg.output_dir);
        out.get("plot", cfg.plot);
        out.finish();
    }
    if (const json* s = root.find("sweep")) {
        Obj sw(*s, "sweep");
        cfg.sweep.tau = read_grid(sw, "tau");
        cfg.sweep.eps = read_grid(sw, "eps");
        sw.get("simulate", cfg.sweep.simulate);
        sw.get("divergence_ratio", cfg.sweep.divergence_ratio);
        sw.finish();
    }
    const json* b = root.find("building");
    const json* rb = root.find("robots");
    const json* cu = root.find("custom");
    if (b && cfg.scenario != ScenarioKind::Building) fail("building section given for another scenario");
    if (rb && cfg.scenario != ScenarioKind::Robots) fail("robots section given for another scenario");
    if (cu && cfg.scenario != ScenarioKind::Custom) fail("custom section given for another scenario");
    if (b) read_building(*b, cfg.building);
    if (rb) read_robots(*rb, cfg);
    if (cfg.scenario == ScenarioKind::Custom) {
        if (!cu) fail("custom scenario needs a custom section");
        read_custom(*cu, cfg);
    }
    root.finish();

    if (cfg.substeps < 1) fail("run.substeps must be positive");
    if (cfg.horizon && *cfg.horizon < 1) fail("run.horizon must be positive");
    if (cfg.sweep.divergence_ratio <= 1.0) fail("sweep.divergence_ratio must exceed 1");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace fes::app
