#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace strainmix::cli {

inline constexpr int kSchemaVersion = 1;

/// Writes into a scratch directory next to `target` and renames it into place
/// on commit(). An uncommitted directory is removed on destruction.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path target);
    ~OutputDir();
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;

    const std::filesystem::path& target() const noexcept { return target_; }
    std::filesystem::path path(const std::filesystem::path& relative) const;
    void write(const std::filesystem::path& relative,
               const std::function<void(std::ostream&)>& body) const;
    void write_text(const std::filesystem::path& relative, const std::string& text) const;
    void commit();

private:
    std::filesystem::path target_;
    std::filesystem::path scratch_;
    bool committed_ = false;
};

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::uint64_t seed = 0;
    bool seed_from_entropy = false;
    std::optional<std::filesystem::path> input;
    std::optional<std::uint64_t> input_digest;
    std::string started_at;
    std::string finished_at;
};

std::string utc_timestamp();
std::string hex64(std::uint64_t value);
std::string manifest_json(const Manifest& manifest);

/// File-name safe form of a sample id.
std::string safe_name(std::string_view id);

}  // namespace strainmix::cli
