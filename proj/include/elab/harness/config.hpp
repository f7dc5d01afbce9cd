#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace elab::harness {

enum class ParamType { Int, UInt, Double, Bool, String, DoubleList, IntList, StringList };

struct ParamSpec {
    std::string key;  // "section.name"
    ParamType type;
    std::string default_value;
    std::string doc;
};

using Schema = std::vector<ParamSpec>;

/// Parsed experiment configuration. Values are stored in canonical text form (doubles in
/// shortest round-trip form) so that serialize and parse are exact inverses.
struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out_dir;
    std::map<std::string, std::string> values;

    long long get_int(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<long long> get_ints(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;
    bool has_part(const std::string& part) const;  // run.parts contains part, or run.parts is "all"

    /// Sets a value, canonicalizing it against the schema. Throws ValidationError on unknown
    /// keys or unparsable values.
    void set(const std::string& key, const std::string& value);

    bool operator==(const ExperimentConfig&) const = default;
};

/// Canonical text for a typed value; throws ValidationError naming the key when unparsable.
std::string canonicalize(const ParamSpec& spec, const std::string& raw);

/// Schema lookup through the experiment registry; throws on unknown experiment names.
const Schema& schema_for(const std::string& experiment);

/// Config with every schema default filled in.
ExperimentConfig default_config(const std::string& experiment);

/// INI text: an [experiment] section with name, seed, threads, out, then one section per
/// parameter prefix. ';' starts a comment.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
/// Accepts either an INI file or a result manifest (.json) carrying a config echo.
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

std::string format_double(double v);  // shortest text that parses back to v

}  // namespace elab::harness
