#pragma once

#include "elab/harness/config.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace elab::harness {

/// Comma-separated, '.' decimal, shortest round-trip doubles; independent of the C++ locale.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(long long v);
    CsvWriter& operator<<(std::size_t v);
    CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(const std::string& v);
    CsvWriter& operator<<(const char* v) { return *this << std::string(v); }
    void end_row();
    void close();

private:
    void sep();
    std::ofstream out_;
    std::size_t columns_, col_ = 0;
};

/// Reads a CSV written by CsvWriter into header plus rows of fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

struct Check {
    std::string criterion;  // "A1".."A16", or empty for module-level invariants
    std::string name;
    bool pass = false;
    bool informational = false;  // reported, never fails the run
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct Manifest {
    std::string experiment;
    ExperimentConfig config;
    std::string git_rev;
    double wall_seconds = 0.0;
    std::vector<Check> checks;
    std::vector<std::string> artifacts;  // relative to the output directory
    /// Closed-form overlay curves for plotting, keyed by artifact name.
    std::map<std::string, std::string> overlays;

    bool all_pass() const;
    std::string to_json() const;
};

Manifest manifest_from_json(const std::string& text);
std::string git_revision();

/// Output sink for one run: every file goes through here so the run never writes outside
/// its directory and partial outputs can be removed on failure.
class RunContext {
public:
    RunContext(const ExperimentConfig& cfg, std::filesystem::path out_dir);

    const ExperimentConfig& config() const { return cfg_; }
    unsigned threads() const { return cfg_.threads; }
    std::unique_ptr<CsvWriter> csv(const std::string& name, const std::vector<std::string>& header);
    void write_text(const std::string& name, const std::string& content);

    Check& check(std::string criterion, std::string name, bool pass, double value, double threshold,
                 std::string detail = {});
    Check& info(std::string criterion, std::string name, double value, std::string detail = {});
    void overlay(const std::string& artifact, const std::string& formula) { overlays_[artifact] = formula; }

    const std::vector<Check>& checks() const { return checks_; }
    const std::vector<std::string>& artifacts() const { return artifacts_; }
    const std::map<std::string, std::string>& overlays() const { return overlays_; }
    const std::filesystem::path& out_dir() const { return out_dir_; }
    void remove_outputs();

private:
    std::filesystem::path resolve(const std::string& name);
    ExperimentConfig cfg_;
    std::filesystem::path out_dir_;
    std::vector<std::string> artifacts_;
    std::vector<Check> checks_;
    std::map<std::string, std::string> overlays_;
};

}  // namespace elab::harness
