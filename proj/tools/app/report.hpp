#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexbench {

// Files `report` reads from a run directory.
const std::vector<std::string>& report_artifacts();

class MissingArtifacts : public std::runtime_error {
public:
    explicit MissingArtifacts(std::vector<std::string> names);
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
};

// Markdown summary of a run directory. Throws MissingArtifacts when inputs are absent.
std::string build_report(const std::filesystem::path& run_dir);

}  // namespace flexbench
