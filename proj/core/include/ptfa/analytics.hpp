#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ptfa/model.hpp"

namespace ptfa {

struct TranscriptMetrics {
    std::int64_t sessions = 0;
    std::int64_t total_posts = 0;
    std::int64_t total_words = 0;
    std::int64_t facilitator_posts = 0;
    std::int64_t facilitator_words = 0;
    std::map<std::string, std::int64_t> posts_per_hat;
    std::map<std::string, std::int64_t> words_per_author;
    std::map<std::string, std::int64_t> interventions_per_phase;
    /// Gaps between consecutive facilitator posts inside Model1 sessions.
    std::int64_t gap_count = 0;
    std::int64_t gap_sum_ms = 0;
    std::int64_t max_gap_ms = 0;

    double mean_gap_ms() const noexcept;

    TranscriptMetrics& operator+=(const TranscriptMetrics& other);
    friend TranscriptMetrics operator+(TranscriptMetrics a, const TranscriptMetrics& b) { return a += b; }
    friend bool operator==(const TranscriptMetrics&, const TranscriptMetrics&) = default;
};

/// Metrics of dataset text (one or more sessions). Only message records count
/// as posts; lifecycle records are skipped. Words are maximal runs of
/// non-whitespace.
TranscriptMetrics compute_metrics(std::string_view jsonl);

/// Sum over files; SchemaViolation messages name the file and line.
TranscriptMetrics compute_metrics(const std::vector<std::filesystem::path>& files);

std::string metrics_json(const TranscriptMetrics& m);
std::string metrics_table(const TranscriptMetrics& m);

}  // namespace ptfa
