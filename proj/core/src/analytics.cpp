#include "ptfa/analytics.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptfa/error.hpp"
#include "ptfa/storage.hpp"
#include "ptfa/text.hpp"

namespace ptfa {

double TranscriptMetrics::mean_gap_ms() const noexcept {
    return gap_count == 0 ? 0.0 : static_cast<double>(gap_sum_ms) / static_cast<double>(gap_count);
}

TranscriptMetrics& TranscriptMetrics::operator+=(const TranscriptMetrics& o) {
    sessions += o.sessions;
    total_posts += o.total_posts;
    total_words += o.total_words;
    facilitator_posts += o.facilitator_posts;
    facilitator_words += o.facilitator_words;
    for (const auto& [k, v] : o.posts_per_hat) posts_per_hat[k] += v;
    for (const auto& [k, v] : o.words_per_author) words_per_author[k] += v;
    for (const auto& [k, v] : o.interventions_per_phase) interventions_per_phase[k] += v;
    gap_count += o.gap_count;
    gap_sum_ms += o.gap_sum_ms;
    max_gap_ms = std::max(max_gap_ms, o.max_gap_ms);
    return *this;
}

TranscriptMetrics compute_metrics(std::string_view jsonl) {
    auto records = parse_dataset(jsonl);
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        if (a.post.session_id != b.post.session_id) return a.post.session_id < b.post.session_id;
        return a.post.seq < b.post.seq;
    });

    TranscriptMetrics m;
    std::set<std::string> sessions;
    bool have_last = false;
    Millis last_intervention = 0;
    for (const auto& r : records) {
        const Post& p = r.post;
        if (sessions.insert(p.session_id).second) {
            have_last = false;
        }
        if (p.kind != PostKind::Message) continue;

        const auto words = static_cast<std::int64_t>(text::word_count(p.text));
        ++m.total_posts;
        m.total_words += words;
        m.words_per_author[p.author.id()] += words;
        if (p.author.kind() != AuthorKind::Facilitator) continue;

        ++m.facilitator_posts;
        m.facilitator_words += words;
        ++m.interventions_per_phase[std::string(to_string(p.phase))];
        if (p.hat) ++m.posts_per_hat[std::string(to_string(*p.hat))];
        if (r.model == FacilitationModel::Model1) {
            if (have_last) {
                const Millis gap = p.ts_ms - last_intervention;
                ++m.gap_count;
                m.gap_sum_ms += gap;
                m.max_gap_ms = std::max(m.max_gap_ms, gap);
            }
            last_intervention = p.ts_ms;
            have_last = true;
        }
    }
    m.sessions = static_cast<std::int64_t>(sessions.size());
    return m;
}

TranscriptMetrics compute_metrics(const std::vector<std::filesystem::path>& files) {
    TranscriptMetrics total;
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw Error(ErrorCode::SchemaViolation, file.string() + ": cannot open file");
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            total += compute_metrics(buf.str());
        } catch (const Error& e) {
            throw Error(e.code(), file.string() + ": " + e.what());
        }
    }
    return total;
}

namespace {

nlohmann::ordered_json to_ordered(const TranscriptMetrics& m) {
    nlohmann::ordered_json j;
    j["sessions"] = m.sessions;
    j["total_posts"] = m.total_posts;
    j["total_words"] = m.total_words;
    j["facilitator_posts"] = m.facilitator_posts;
    j["facilitator_words"] = m.facilitator_words;
    j["posts_per_hat"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.posts_per_hat) j["posts_per_hat"][k] = v;
    j["words_per_author"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.words_per_author) j["words_per_author"][k] = v;
    j["interventions_per_phase"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.interventions_per_phase) j["interventions_per_phase"][k] = v;
    j["gap_count"] = m.gap_count;
    j["gap_sum_ms"] = m.gap_sum_ms;
    j["mean_gap_ms"] = m.mean_gap_ms();
    j["max_gap_ms"] = m.max_gap_ms;
    return j;
}

std::string format_number(const nlohmann::ordered_json& v) {
    if (v.is_number_float()) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(1) << v.get<double>();
        return os.str();
    }
    return v.dump();
}

}  // namespace

std::string metrics_json(const TranscriptMetrics& m) { return to_ordered(m).dump(2) + "\n"; }

std::string metrics_table(const TranscriptMetrics& m) {
    std::vector<std::pair<std::string, std::string>> rows;
    const auto doc = to_ordered(m);
    for (const auto& [key, value] : doc.items()) {
        if (value.is_object()) {
            for (const auto& [sub, v] : value.items()) rows.emplace_back(key + "." + sub, format_number(v));
        } else {
            rows.emplace_back(key, format_number(value));
        }
    }
    std::size_t width = 6;
    for (const auto& r : rows) width = std::max(width, r.first.size());
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(width)) << "metric" << "  value\n";
    os << std::string(width, '-') << "  " << std::string(10, '-') << "\n";
    for (const auto& [k, v] : rows) {
        os << std::left << std::setw(static_cast<int>(width)) << k << "  " << v << "\n";
    }
    return os.str();
}

}  // namespace ptfa
