#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "crowdvote/election.hpp"

namespace crowdvote {

struct Share {
    std::string id;
    std::int64_t count = 0;
    double exact = 0.0;    // 100 * count / total, unrounded
    double display = 0.0;  // rounded half away from zero to one decimal
};

/// Candidates sorted by descending count (ties by id); abstain and
/// unparseable kept separately.
struct VoteShares {
    std::vector<Share> candidates;
    Share abstain;
    Share unparseable;
    std::int64_t total_ballots = 0;

    /// Display share of a candidate; 0 when absent.
    double display_share(const std::string& candidate_id) const;
};

/// 100 * count / total rounded half away from zero to one decimal, computed
/// in integer arithmetic so 58.333... -> 58.3 and 12.25 -> 12.3 exactly.
double round_share(std::int64_t count, std::int64_t total);

/// Throws EmptyTally when total_ballots == 0.
VoteShares percentages(const RoundTally& tally);

struct PieSlice {
    std::string id;
    std::string label;
    double start_degrees = 0.0;
    double sweep_degrees = 0.0;
};

/// Slices proportional to unrounded shares: candidates by descending share,
/// then unparseable, abstain last. Zero-count slices are omitted.
std::vector<PieSlice> pie_slices(const RoundResult& round);

enum class ReportFormat { kJson, kCsv, kSvgPie, kText };

/// "json", "csv", "svg-pie", "text"; throws UnsupportedFormat.
ReportFormat parse_report_format(const std::string& name);

/// Deterministic rendering of complete results. svg-pie draws one pie per
/// round side by side in a single document.
std::string emit_report(const ElectionResults& results, ReportFormat format);
std::string emit_report(const ElectionResults& results, const std::string& format);

/// Single-round pie chart.
std::string render_pie_svg(const RoundResult& round);

inline constexpr std::string_view kAbstainRowId = "__abstain__";
inline constexpr std::string_view kUnparseableRowId = "__unparseable__";

/// Reads the csv report back into per-round tallies.
std::map<std::string, RoundTally> tallies_from_csv(std::string_view csv);

}  // namespace crowdvote
