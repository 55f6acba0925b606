#include "advforge/config.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>

#include "advforge/common.hpp"
#include "advforge/dataset.hpp"

namespace advforge::toolkit {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InvalidInput(key + ": not a number: " + v);
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const long long d = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InvalidInput(key + ": not an integer: " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw InvalidInput(key + ": not a boolean (on/off): " + v);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : v) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::vector<std::pair<double, double>> parse_bins(const std::string& key, const std::string& v) {
    const std::vector<std::string> edges = split_list(v);
    if (edges.size() < 2) throw InvalidInput(key + ": need at least two bin edges");
    std::vector<std::pair<double, double>> bins;
    for (size_t i = 0; i + 1 < edges.size(); ++i)
        bins.emplace_back(parse_double(key, edges[i]), parse_double(key, edges[i + 1]));
    return bins;
}

} // namespace

detect::DetectorConfig RunConfig::detector_config() const {
    if (profile == "toy") return detect::DetectorConfig::toy();
    if (profile == "full") return detect::DetectorConfig::full();
    throw InvalidInput("run.profile: expected toy or full, got " + profile);
}

void RunConfig::validate() const {
    if (schema != 1) throw InvalidInput("schema: unsupported value (expected 1)");
    const detect::DetectorConfig dc = detector_config();
    attack.validate(dc.num_classes);
    grid.validate();
    if (holdout_pairs < 1) throw InvalidInput("grid.holdout_pairs must be at least 1");
    if (backgrounds.empty()) throw InvalidInput("run.backgrounds must be set");
}

RunConfig load_config(const std::string& path, const std::string& vector_override) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("config file not found: " + path);
    // First pass: collect (section, key, value) triples in order.
    std::vector<std::array<std::string, 3>> entries;
    std::string line, section;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw InvalidInput(path + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "run" && section != "attack" && section != "grid")
                throw InvalidInput("unknown config section: [" + section + "]");
            continue;
        }
        const size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected key = value");
        entries.push_back({section, trim(s.substr(0, eq)), trim(s.substr(eq + 1))});
    }
    RunConfig cfg;
    // The profile and the attack vector shape the defaults, so resolve them
    // before applying the remaining overrides.
    for (const auto& [sec, key, value] : entries)
        if (sec == "run" && key == "profile") cfg.profile = value;
    losses::Vector vec = losses::Vector::HA;
    for (const auto& [sec, key, value] : entries)
        if (sec == "attack" && key == "vector") vec = losses::vector_from_name(value);
    if (!vector_override.empty()) vec = losses::vector_from_name(vector_override);
    cfg.attack = attack::AttackConfig::defaults_for(vec);
    if (cfg.profile == "full") {
        cfg.attack.ratios = {0.01, 0.1, 0.5, 0.2};
        cfg.attack.patch_size = 160;
        cfg.grid.ratio_min = 0.01;
        cfg.grid.ratio_max = 0.5;
    } else if (cfg.profile == "toy") {
        cfg.grid.ratio_min = cfg.attack.ratios.r1;
        cfg.grid.ratio_max = cfg.attack.ratios.r3;
    }
    for (const auto& [sec, key, value] : entries) {
        const std::string full_key = sec.empty() ? key : sec + "." + key;
        if (sec.empty()) {
            if (key == "schema") cfg.schema = int(parse_int(full_key, value));
            else throw InvalidInput("config key not recognized: " + full_key);
        } else if (sec == "run") {
            if (key == "profile") ; // already applied
            else if (key == "seed") cfg.seed = uint64_t(parse_int(full_key, value));
            else if (key == "checkpoint") cfg.checkpoint = value;
            else if (key == "backgrounds") cfg.backgrounds = value;
            else throw InvalidInput("config key not recognized: " + full_key);
        } else if (sec == "attack") {
            if (key == "vector") ; // already applied
            else if (key == "c") cfg.attack.c = parse_double(full_key, value);
            else if (key == "k") cfg.attack.k = int(parse_int(full_key, value));
            else if (key == "learning_rate") cfg.attack.learning_rate = parse_double(full_key, value);
            else if (key == "n") cfg.attack.n = int(parse_int(full_key, value));
            else if (key == "steps") cfg.attack.steps = int(parse_int(full_key, value));
            else if (key == "source_label") cfg.attack.source_label = int(parse_int(full_key, value));
            else if (key == "target_label") cfg.attack.target_label = int(parse_int(full_key, value));
            else if (key == "conf_threshold") cfg.attack.conf_threshold = parse_double(full_key, value);
            else if (key == "patch_size") cfg.attack.patch_size = int(parse_int(full_key, value));
            else if (key == "mask") cfg.mask_spec = value;
            else if (key == "ta_literal_suppression")
                cfg.attack.ta_literal_suppression = parse_bool(full_key, value);
            else throw InvalidInput("config key not recognized: " + full_key);
        } else { // grid
            if (key == "frames_per_cell") cfg.grid.frames_per_cell = int(parse_int(full_key, value));
            else if (key == "th") cfg.grid.th = parse_double(full_key, value);
            else if (key == "rho0") cfg.grid.rho0 = parse_double(full_key, value);
            else if (key == "distances") cfg.grid.distance_bins = parse_bins(full_key, value);
            else if (key == "angles") cfg.grid.angle_bins = parse_bins(full_key, value);
            else if (key == "illuminations") cfg.grid.illuminations = split_list(value);
            else if (key == "night_glare") cfg.grid.night_glare = parse_bool(full_key, value);
            else if (key == "seed") cfg.grid.seed = uint64_t(parse_int(full_key, value));
            else if (key == "holdout_pairs") cfg.holdout_pairs = int(parse_int(full_key, value));
            else throw InvalidInput("config key not recognized: " + full_key);
        }
    }
    // The attack seed follows the run seed unless the file pins one later via
    // CLI override; keep them aligned here.
    cfg.attack.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

imaging::Mask resolve_mask(const std::string& spec, int patch_size) {
    if (spec == "default") return imaging::Mask();
    if (spec == "full") return imaging::Mask(patch_size, patch_size, 1);
    if (spec == "disc") return data::disc_mask(patch_size);
    imaging::Mask m = imaging::read_mask_png(spec);
    if (m.h != patch_size || m.w != patch_size)
        throw InvalidInput("attack.mask: mask file size does not match patch_size");
    return m;
}

std::vector<imaging::Image> load_backgrounds(const std::string& spec, int frame_size,
                                             uint64_t seed) {
    std::vector<imaging::Image> out;
    if (spec.rfind("procedural:", 0) == 0) {
        const long long n = parse_int("run.backgrounds", spec.substr(11));
        if (n < 1) throw InvalidInput("run.backgrounds: procedural count must be positive");
        uint64_t mix[2] = {seed, 0x6b67'6421ull};
        Rng rng(fnv1a64(mix, sizeof mix));
        for (long long i = 0; i < n; ++i) out.push_back(data::random_background(rng, frame_size));
        return out;
    }
    if (!fs::is_directory(spec))
        throw InvalidInput("run.backgrounds: not a directory or procedural spec: " + spec);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(spec))
        if (e.is_regular_file() && e.path().extension() == ".png")
            files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) {
        imaging::Image img = imaging::read_png(f);
        if (img.h != frame_size || img.w != frame_size)
            throw InvalidInput("run.backgrounds: " + f + " does not match the frame size");
        out.push_back(std::move(img));
    }
    if (out.empty()) throw InvalidInput("run.backgrounds: no .png files in " + spec);
    return out;
}

} // namespace advforge::toolkit
