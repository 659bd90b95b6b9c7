/// @file audit.hpp
/// @brief Structured per-record audit trail: one JSON line per record per
/// stage (id, stage, outcome, attempts, latency). Diagnostics only; never a
/// primary output.

#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

namespace rubric_forge {

class AuditLog {
  public:
    AuditLog() = default;
    explicit AuditLog(std::filesystem::path file, bool echo_stderr = false)
        : file_(std::move(file)), echo_stderr_(echo_stderr) {}

    void set_echo(bool echo) { echo_stderr_ = echo; }

    void record(const std::string& id, const std::string& stage, const std::string& outcome,
                int attempts = 0, long long latency_ms = -1,
                const std::string& detail = {});

  private:
    std::optional<std::filesystem::path> file_;
    bool echo_stderr_ = false;
    std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
};

}  // namespace rubric_forge
