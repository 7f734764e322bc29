#include "params.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace swarmlink {

std::vector<Target> ExperimentConfig::make_targets() const {
    std::vector<Target> targets;
    targets.reserve(n_targets);
    for (int i = 0; i < n_targets; ++i) {
        double angle = 2.0 * M_PI * i / std::max(1, n_targets);
        Target t;
        t.id = i;
        t.position = Pose2D(target_radius * std::cos(angle), target_radius * std::sin(angle), angle);
        t.required_links = links_per_target;
        targets.push_back(t);
    }
    return targets;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

void validate_params(const ControlParams& p) {
    if (!(p.safe_distance > 0.0 && p.safe_distance < p.critical_distance &&
          p.critical_distance < p.comm_range))
        fail("distance ordering violated: need 0 < safe_distance < critical_distance < comm_range");
    if (p.dt <= 0.0) fail("dt must be positive");
    if (p.spring_gain <= 0.0) fail("spring_gain must be positive");
    if (p.target_gain <= 0.0) fail("target_gain must be positive");
    if (p.obstacle_gain <= 0.0) fail("obstacle_gain must be positive");
    if (p.lj_epsilon <= 0.0) fail("lj_epsilon must be positive");
    if (p.lj_delta <= 0.0) fail("lj_delta must be positive");
    if (p.max_speed <= 0.0) fail("max_speed must be positive");
    if (p.move_threshold <= 0.0) fail("move_threshold must be positive");
    if (p.failure_timeout_steps < 1) fail("failure_timeout_steps must be >= 1");
    if (p.heading_gain <= 0.0) fail("heading_gain must be positive");
    if (p.max_turn_rate <= 0.0) fail("max_turn_rate must be positive");
    if (p.seek_speed_factor <= 0.0 || p.seek_speed_factor > 1.0)
        fail("seek_speed_factor must be in (0, 1]");
}

void validate_setup(const ControlParams& params, int n_robots, const std::vector<Target>& targets) {
    validate_params(params);
    if (targets.empty()) fail("at least one target required");
    std::unordered_set<int> ids;
    for (const auto& t : targets) {
        if (t.required_links < 1) fail("target required_links must be >= 1");
        if (!ids.insert(t.id).second) fail("duplicate target id " + std::to_string(t.id));
        if (t.id < 0 || t.id > 254) fail("target id must fit in one byte");
    }
    // One root plus one worker per target is the hard floor; networkers are
    // recruited on demand.
    int minimum = 1 + static_cast<int>(targets.size());
    if (n_robots < minimum)
        fail("n_robots=" + std::to_string(n_robots) + " too small: need at least " +
             std::to_string(minimum) + " (root + one worker per target)");
    if (n_robots > 250) fail("n_robots must be <= 250 (ids are one byte, 255 is broadcast)");
}

void validate_config(const ExperimentConfig& c) {
    if (c.n_targets < 1) fail("n_targets must be >= 1");
    if (c.links_per_target < 1) fail("links_per_target must be >= 1");
    if (c.n_targets * c.links_per_target > 200) fail("too many chains: ids are one byte");
    if (c.target_radius <= 0.0) fail("target_radius must be positive");
    if (c.arena_half_extent < c.target_radius)
        fail("arena_half_extent must cover target_radius");
    if (c.failure_probability < 0.0 || c.failure_probability > 1.0)
        fail("failure_probability must be in [0, 1]");
    if (c.n_seeds < 1) fail("n_seeds must be >= 1");
    if (c.max_steps < 1) fail("max_steps must be >= 1");
    if (c.sample_every < 1) fail("sample_every must be >= 1");
    validate_setup(c.control, c.n_robots, c.make_targets());
}

namespace {

// Field table shared by the parser, serializer, and key-based accessors.
struct FieldDef {
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing junk");
        return d;
    } catch (const std::exception&) {
        fail("bad numeric value for " + key + ": '" + v + "'");
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing junk");
        return static_cast<int>(n);
    } catch (const std::exception&) {
        fail("bad integer value for " + key + ": '" + v + "'");
    }
}

const std::map<std::string, FieldDef>& field_table() {
    static const std::map<std::string, FieldDef> table = [] {
        std::map<std::string, FieldDef> t;
        auto add_int = [&t](const std::string& key, int ExperimentConfig::* member) {
            t[key] = {[member](const ExperimentConfig& c) { return std::to_string(c.*member); },
                      [member, key](ExperimentConfig& c, const std::string& v) {
                          c.*member = parse_int(key, v);
                      }};
        };
        auto add_double = [&t](const std::string& key, double ExperimentConfig::* member) {
            t[key] = {[member](const ExperimentConfig& c) { return fmt_double(c.*member); },
                      [member, key](ExperimentConfig& c, const std::string& v) {
                          c.*member = parse_double(key, v);
                      }};
        };
        auto add_string = [&t](const std::string& key, std::string ExperimentConfig::* member) {
            t[key] = {[member](const ExperimentConfig& c) { return c.*member; },
                      [member](ExperimentConfig& c, const std::string& v) { c.*member = v; }};
        };
        auto add_ctrl = [&t](const std::string& key, double ControlParams::* member) {
            t[key] = {[member](const ExperimentConfig& c) { return fmt_double(c.control.*member); },
                      [member, key](ExperimentConfig& c, const std::string& v) {
                          c.control.*member = parse_double(key, v);
                      }};
        };
        add_string("name", &ExperimentConfig::name);
        add_int("n_robots", &ExperimentConfig::n_robots);
        add_int("n_targets", &ExperimentConfig::n_targets);
        add_int("links_per_target", &ExperimentConfig::links_per_target);
        add_double("target_radius", &ExperimentConfig::target_radius);
        add_double("arena_half_extent", &ExperimentConfig::arena_half_extent);
        add_double("failure_probability", &ExperimentConfig::failure_probability);
        add_int("n_seeds", &ExperimentConfig::n_seeds);
        add_int("max_steps", &ExperimentConfig::max_steps);
        add_int("sample_every", &ExperimentConfig::sample_every);
        add_string("output_dir", &ExperimentConfig::output_dir);
        add_ctrl("comm_range", &ControlParams::comm_range);
        add_ctrl("dt", &ControlParams::dt);
        add_ctrl("move_threshold", &ControlParams::move_threshold);
        add_ctrl("spring_gain", &ControlParams::spring_gain);
        add_ctrl("damping_coeff", &ControlParams::damping_coeff);
        add_ctrl("safe_distance", &ControlParams::safe_distance);
        add_ctrl("critical_distance", &ControlParams::critical_distance);
        add_ctrl("lj_epsilon", &ControlParams::lj_epsilon);
        add_ctrl("lj_delta", &ControlParams::lj_delta);
        add_ctrl("target_gain", &ControlParams::target_gain);
        add_ctrl("obstacle_gain", &ControlParams::obstacle_gain);
        add_ctrl("max_speed", &ControlParams::max_speed);
        add_ctrl("heading_gain", &ControlParams::heading_gain);
        add_ctrl("max_turn_rate", &ControlParams::max_turn_rate);
        add_ctrl("seek_speed_factor", &ControlParams::seek_speed_factor);
        t["failure_timeout_steps"] = {
            [](const ExperimentConfig& c) { return std::to_string(c.control.failure_timeout_steps); },
            [](ExperimentConfig& c, const std::string& v) {
                c.control.failure_timeout_steps = parse_int("failure_timeout_steps", v);
            }};
        return t;
    }();
    return table;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void config_set_field(ExperimentConfig& config, const std::string& key, const std::string& value) {
    if (key == "obstacle") {
        std::istringstream is(value);
        Obstacle ob;
        if (!(is >> ob.position.x >> ob.position.y >> ob.radius) || ob.radius <= 0.0)
            fail("obstacle expects 'x y radius', got '" + value + "'");
        config.obstacles.push_back(ob);
        return;
    }
    auto it = field_table().find(key);
    if (it == field_table().end()) fail("unknown config key '" + key + "'");
    it->second.set(config, value);
}

std::string config_get_field(const ExperimentConfig& config, const std::string& key) {
    auto it = field_table().find(key);
    if (it == field_table().end()) fail("unknown config key '" + key + "'");
    return it->second.get(config);
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig config;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            fail("config line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        config_set_field(config, key, value);
    }
    return config;
}

std::string config_to_text(const ExperimentConfig& config) {
    std::ostringstream os;
    for (const auto& [key, def] : field_table())
        os << key << " = " << def.get(config) << "\n";
    for (const auto& ob : config.obstacles)
        os << "obstacle = " << fmt_double(ob.position.x) << " " << fmt_double(ob.position.y)
           << " " << fmt_double(ob.radius) << "\n";
    return os.str();
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void save_config_file(const ExperimentConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write config file '" + path + "'");
    out << config_to_text(config);
}

}  // namespace swarmlink
