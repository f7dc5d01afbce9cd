#include "elab/harness/config.hpp"

#include "elab/harness/experiments.hpp"
#include "elab/harness/io.hpp"
#include "elab/types.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace elab::harness {

namespace {

const std::vector<std::string> kHeaderKeys = {"name", "seed", "threads", "out"};

std::string trim(std::string s) {
    boost::algorithm::trim(s);
    return s;
}

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> parts;
    if (trim(raw).empty()) return parts;
    boost::algorithm::split(parts, raw, boost::algorithm::is_any_of(","));
    for (auto& p : parts) p = trim(p);
    return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& raw, const char* what) {
    throw ValidationError("config key '" + key + "': cannot parse '" + raw + "' as " + what);
}

double parse_double(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) bad_value(key, raw, "a number");
    return v;
}

long long parse_int(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) bad_value(key, raw, "an integer");
    return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
        bad_value(key, raw, "a non-negative integer");
    return v;
}

const ParamSpec& find_spec(const std::string& experiment, const std::string& key) {
    const Schema& schema = schema_for(experiment);
    for (const auto& p : schema)
        if (p.key == key) return p;
    throw ValidationError("unknown config key '" + key + "' for experiment '" + experiment + "'");
}

const std::string& lookup(const ExperimentConfig& cfg, const std::string& key) {
    auto it = cfg.values.find(key);
    if (it == cfg.values.end()) throw ValidationError("config key '" + key + "' is not set");
    return it->second;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::string canonicalize(const ParamSpec& spec, const std::string& raw) {
    switch (spec.type) {
        case ParamType::Int: return std::to_string(parse_int(spec.key, raw));
        case ParamType::UInt: return std::to_string(parse_uint(spec.key, raw));
        case ParamType::Double: {
            const double v = parse_double(spec.key, raw);
            if (!std::isfinite(v)) bad_value(spec.key, raw, "a finite number");
            return format_double(v);
        }
        case ParamType::Bool: {
            const std::string s = boost::algorithm::to_lower_copy(trim(raw));
            if (s == "true" || s == "1" || s == "yes") return "true";
            if (s == "false" || s == "0" || s == "no") return "false";
            bad_value(spec.key, raw, "a boolean");
        }
        case ParamType::String: return trim(raw);
        case ParamType::DoubleList: {
            std::string out;
            for (const auto& p : split_list(raw)) out += (out.empty() ? "" : ",") + format_double(parse_double(spec.key, p));
            return out;
        }
        case ParamType::IntList: {
            std::string out;
            for (const auto& p : split_list(raw)) out += (out.empty() ? "" : ",") + std::to_string(parse_int(spec.key, p));
            return out;
        }
        case ParamType::StringList: {
            std::string out;
            for (const auto& p : split_list(raw)) out += (out.empty() ? "" : ",") + p;
            return out;
        }
    }
    return raw;
}

long long ExperimentConfig::get_int(const std::string& key) const { return parse_int(key, lookup(*this, key)); }
std::uint64_t ExperimentConfig::get_uint(const std::string& key) const { return parse_uint(key, lookup(*this, key)); }
double ExperimentConfig::get_double(const std::string& key) const { return parse_double(key, lookup(*this, key)); }
bool ExperimentConfig::get_bool(const std::string& key) const { return lookup(*this, key) == "true"; }
const std::string& ExperimentConfig::get_string(const std::string& key) const { return lookup(*this, key); }

std::vector<double> ExperimentConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& p : split_list(lookup(*this, key))) out.push_back(parse_double(key, p));
    return out;
}

std::vector<long long> ExperimentConfig::get_ints(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& p : split_list(lookup(*this, key))) out.push_back(parse_int(key, p));
    return out;
}

std::vector<std::string> ExperimentConfig::get_strings(const std::string& key) const {
    return split_list(lookup(*this, key));
}

bool ExperimentConfig::has_part(const std::string& part) const {
    const auto parts = get_strings("run.parts");
    return std::find(parts.begin(), parts.end(), "all") != parts.end() ||
           std::find(parts.begin(), parts.end(), part) != parts.end();
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const ParamSpec& spec = find_spec(experiment, key);
    values[key] = canonicalize(spec, value);
    if (key == "run.parts") {
        const auto& known = harness::experiment(experiment).parts;
        for (const auto& p : get_strings(key))
            if (p != "all" && std::find(known.begin(), known.end(), p) == known.end())
                throw ValidationError("run.parts: unknown part '" + p + "' for experiment '" + experiment + "'");
    }
}

const Schema& schema_for(const std::string& name) { return experiment(name).schema; }

ExperimentConfig default_config(const std::string& name) {
    ExperimentConfig cfg;
    cfg.experiment = name;
    cfg.out_dir = "results/" + name;
    for (const auto& p : schema_for(name)) cfg.values[p.key] = canonicalize(p, p.default_value);
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    const auto header = tree.get_child_optional("experiment");
    if (!header) throw ValidationError("config: missing [experiment] section");
    const auto name = header->get_optional<std::string>("name");
    if (!name) throw ValidationError("config: [experiment] needs a name");
    ExperimentConfig cfg = default_config(trim(*name));
    for (const auto& [k, v] : *header) {
        if (std::find(kHeaderKeys.begin(), kHeaderKeys.end(), k) == kHeaderKeys.end())
            throw ValidationError("config: unknown key 'experiment." + k + "'");
        const std::string val = v.get_value<std::string>();
        if (k == "seed") cfg.seed = parse_uint("experiment.seed", val);
        if (k == "threads") cfg.threads = static_cast<unsigned>(parse_uint("experiment.threads", val));
        if (k == "out") cfg.out_dir = trim(val);
    }
    for (const auto& [section, body] : tree) {
        if (section == "experiment") continue;
        if (!body.data().empty()) throw ValidationError("config: key '" + section + "' outside a section");
        for (const auto& [k, v] : body) cfg.set(section + "." + k, v.get_value<std::string>());
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

ExperimentConfig load_config(const std::string& path) {
    if (boost::algorithm::ends_with(path, ".json")) {
        std::ifstream in(path);
        if (!in) throw ValidationError("config: cannot open '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return manifest_from_json(ss.str()).config;
    }
    return parse_config_file(path);
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "[experiment]\n"
       << "name = " << cfg.experiment << "\n"
       << "seed = " << cfg.seed << "\n"
       << "threads = " << cfg.threads << "\n"
       << "out = " << cfg.out_dir << "\n";
    std::string current;
    for (const auto& [key, value] : cfg.values) {
        const auto dot = key.find('.');
        const std::string section = key.substr(0, dot);
        if (section != current) {
            os << "\n[" << section << "]\n";
            current = section;
        }
        os << key.substr(dot + 1) << " = " << value << "\n";
    }
    return os.str();
}

}  // namespace elab::harness
