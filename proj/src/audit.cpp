#include "rubric_forge/audit.hpp"

#include <fstream>
#include <iostream>

namespace rubric_forge {

void AuditLog::record(const std::string& id, const std::string& stage, const std::string& outcome,
                      int attempts, long long latency_ms, const std::string& detail) {
    nlohmann::ordered_json line;
    line["id"] = id;
    line["stage"] = stage;
    line["outcome"] = outcome;
    if (attempts > 0) line["attempts"] = attempts;
    if (latency_ms >= 0) line["latency_ms"] = latency_ms;
    if (!detail.empty()) line["detail"] = detail;

    std::lock_guard lock(*mutex_);
    if (file_) {
        std::ofstream out(*file_, std::ios::app);
        out << line.dump() << '\n';
    }
    if (echo_stderr_) std::cerr << line.dump() << '\n';
}

}  // namespace rubric_forge
