#include "strainmix_cli/output.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "strainmix/errors.hpp"
#include "strainmix/strainmix.hpp"

namespace strainmix::cli {

namespace fs = std::filesystem;

namespace {
std::atomic<unsigned> scratch_counter{0};
}

OutputDir::OutputDir(fs::path target) : target_(std::move(target)) {
    if (target_.empty()) throw InputError("--out is required");
    std::error_code ec;
    if (fs::exists(target_, ec)) {
        if (!fs::is_directory(target_)) throw InputError(target_.string() + " exists and is not a directory");
        if (!fs::is_empty(target_)) throw InputError("output directory " + target_.string() + " is not empty");
    }
    const fs::path parent = fs::absolute(target_).parent_path();
    fs::create_directories(parent);
    scratch_ = parent / ("." + target_.filename().string() + ".tmp-" + std::to_string(::getpid()) + "-" +
                         std::to_string(scratch_counter++));
    fs::remove_all(scratch_);
    fs::create_directories(scratch_);
}

OutputDir::~OutputDir() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(scratch_, ec);
    }
}

fs::path OutputDir::path(const fs::path& relative) const { return scratch_ / relative; }

void OutputDir::write(const fs::path& relative, const std::function<void(std::ostream&)>& body) const {
    const fs::path p = path(relative);
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + p.string());
}

void OutputDir::write_text(const fs::path& relative, const std::string& text) const {
    write(relative, [&](std::ostream& out) { out << text; });
}

void OutputDir::commit() {
    std::error_code ec;
    if (fs::exists(target_, ec)) fs::remove(target_);  // empty, checked in the constructor
    fs::rename(scratch_, target_);
    committed_ = true;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string manifest_json(const Manifest& m) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["tool"] = "strainmix";
    j["tool_version"] = kVersion;
    j["command"] = m.command;
    std::string line;
    for (const auto& a : m.argv) {
        if (!line.empty()) line += ' ';
        line += a;
    }
    j["command_line"] = line;
    j["seed"] = m.seed;
    j["seed_source"] = m.seed_from_entropy ? "entropy" : "flag";
    if (m.input) {
        j["input"] = {{"path", m.input->string()}, {"fnv1a64", hex64(m.input_digest.value_or(0))}};
    } else {
        j["input"] = nullptr;
    }
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    return j.dump(2) + "\n";
}

std::string safe_name(std::string_view id) {
    std::string out;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '.' || c == '-' || c == '_';
        out += ok ? c : '_';
    }
    if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
    return out;
}

}  // namespace strainmix::cli
