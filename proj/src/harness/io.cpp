#include "elab/harness/io.hpp"

#include "elab/types.hpp"

#include <json.hpp>

#include <boost/algorithm/string.hpp>

#include <sstream>

#ifndef ELAB_GIT_REV
#define ELAB_GIT_REV "unknown"
#endif

namespace elab::harness {

using nlohmann::ordered_json;

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
    for (const auto& h : header) *this << h;
    end_row();
}

void CsvWriter::sep() {
    if (col_ == columns_) throw std::logic_error("csv: too many fields in a row");
    if (col_++ > 0) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double v) {
    sep();
    out_ << format_double(v);
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
    sep();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::size_t v) {
    sep();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
    sep();
    out_ << v;
    return *this;
}

void CsvWriter::end_row() {
    if (col_ != columns_) throw std::logic_error("csv: row has the wrong number of fields");
    out_ << '\n';
    col_ = 0;
}

void CsvWriter::close() { out_.close(); }

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ValidationError("csv: no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        boost::algorithm::split(fields, line, boost::algorithm::is_any_of(","));
        if (first) {
            t.header = fields;
            first = false;
        } else {
            t.rows.push_back(std::move(fields));
        }
    }
    return t;
}

bool Manifest::all_pass() const {
    for (const auto& c : checks)
        if (!c.informational && !c.pass) return false;
    return true;
}

namespace {

ordered_json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);  // "inf" / "nan" as strings
}

double number_from_json(const ordered_json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    return std::stod(s);
}

}  // namespace

std::string Manifest::to_json() const {
    ordered_json j;
    j["experiment"] = experiment;
    ordered_json c;
    c["experiment"] = config.experiment;
    c["seed"] = config.seed;
    c["threads"] = config.threads;
    c["out"] = config.out_dir;
    ordered_json vals = ordered_json::object();
    for (const auto& [k, v] : config.values) vals[k] = v;
    c["values"] = vals;
    j["config"] = c;
    j["seed"] = config.seed;
    j["git_rev"] = git_rev;
    j["wall_seconds"] = wall_seconds;
    j["all_pass"] = all_pass();
    ordered_json checks_j = ordered_json::array();
    for (const auto& ch : checks) {
        ordered_json x;
        x["criterion"] = ch.criterion;
        x["name"] = ch.name;
        x["pass"] = ch.pass;
        x["informational"] = ch.informational;
        x["value"] = json_number(ch.value);
        x["threshold"] = json_number(ch.threshold);
        x["detail"] = ch.detail;
        checks_j.push_back(x);
    }
    j["checks"] = checks_j;
    j["artifacts"] = artifacts;
    ordered_json ov = ordered_json::object();
    for (const auto& [k, v] : overlays) ov[k] = v;
    j["overlays"] = ov;
    return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("manifest: ") + e.what());
    }
    Manifest m;
    try {
        m.experiment = j.at("experiment").get<std::string>();
        const auto& c = j.at("config");
        m.config.experiment = c.at("experiment").get<std::string>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.threads = c.at("threads").get<unsigned>();
        m.config.out_dir = c.at("out").get<std::string>();
        for (const auto& [k, v] : c.at("values").items()) m.config.values[k] = v.get<std::string>();
        m.git_rev = j.value("git_rev", "");
        m.wall_seconds = j.value("wall_seconds", 0.0);
        for (const auto& x : j.value("checks", ordered_json::array())) {
            Check ch;
            ch.criterion = x.at("criterion").get<std::string>();
            ch.name = x.at("name").get<std::string>();
            ch.pass = x.at("pass").get<bool>();
            ch.informational = x.at("informational").get<bool>();
            ch.value = number_from_json(x.at("value"));
            ch.threshold = number_from_json(x.at("threshold"));
            ch.detail = x.at("detail").get<std::string>();
            m.checks.push_back(ch);
        }
        m.artifacts = j.value("artifacts", std::vector<std::string>{});
        m.overlays = j.value("overlays", std::map<std::string, std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("manifest: ") + e.what());
    }
    // Re-canonicalize against the schema so a hand-edited manifest is validated like an INI file.
    ExperimentConfig checked = default_config(m.config.experiment);
    checked.seed = m.config.seed;
    checked.threads = m.config.threads;
    checked.out_dir = m.config.out_dir;
    for (const auto& [k, v] : m.config.values) checked.set(k, v);
    m.config = checked;
    return m;
}

std::string git_revision() { return ELAB_GIT_REV; }

RunContext::RunContext(const ExperimentConfig& cfg, std::filesystem::path out_dir)
    : cfg_(cfg), out_dir_(std::move(out_dir)) {
    std::filesystem::create_directories(out_dir_);
}

std::filesystem::path RunContext::resolve(const std::string& name) {
    const std::filesystem::path rel(name);
    if (rel.is_absolute() || rel.has_parent_path() || name.empty() || name == "." || name == "..")
        throw std::logic_error("output name '" + name + "' must be a plain file name");
    if (std::find(artifacts_.begin(), artifacts_.end(), name) != artifacts_.end())
        throw std::logic_error("output '" + name + "' written twice");
    artifacts_.push_back(name);
    return out_dir_ / rel;
}

std::unique_ptr<CsvWriter> RunContext::csv(const std::string& name, const std::vector<std::string>& header) {
    return std::make_unique<CsvWriter>(resolve(name), header);
}

void RunContext::write_text(const std::string& name, const std::string& content) {
    std::ofstream out(resolve(name), std::ios::binary);
    out << content;
}

Check& RunContext::check(std::string criterion, std::string name, bool pass, double value, double threshold,
                         std::string detail) {
    checks_.push_back({std::move(criterion), std::move(name), pass, false, value, threshold, std::move(detail)});
    return checks_.back();
}

Check& RunContext::info(std::string criterion, std::string name, double value, std::string detail) {
    checks_.push_back({std::move(criterion), std::move(name), true, true, value, 0.0, std::move(detail)});
    return checks_.back();
}

void RunContext::remove_outputs() {
    for (const auto& a : artifacts_) std::filesystem::remove(out_dir_ / a);
    std::filesystem::remove(out_dir_ / "manifest.json");
    std::error_code ec;
    std::filesystem::remove(out_dir_, ec);  // only succeeds when empty
    artifacts_.clear();
}

}  // namespace elab::harness
