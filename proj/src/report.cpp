#include "crowdvote/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "crowdvote/error.hpp"
#include "crowdvote/util.hpp"

namespace crowdvote {
namespace {

constexpr double kPieRadius = 150.0;
constexpr double kPanelWidth = 420.0;
constexpr double kPanelHeight = 520.0;
constexpr std::string_view kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                         "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#393b79"};
constexpr std::string_view kAbstainColor = "#bdbdbd";
constexpr std::string_view kUnparseableColor = "#636363";

Share make_share(std::string id, std::int64_t count, std::int64_t total) {
    Share share;
    share.id = std::move(id);
    share.count = count;
    share.exact = 100.0 * static_cast<double>(count) / static_cast<double>(total);
    share.display = round_share(count, total);
    return share;
}

std::string xml_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool row_has_content = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            row_has_content = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            row_has_content = true;
        } else if (c == '\n') {
            if (row_has_content || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            row_has_content = false;
        } else if (c != '\r') {
            field += c;
            row_has_content = true;
        }
    }
    if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string display_name_of(const RoundResult& round, const std::string& id) {
    for (const auto& c : round.candidates) {
        if (c.candidate_id == id) return c.display_name;
    }
    return id;
}

std::string format_share(double share) { return fmt::format("{:.1f}", share); }

/// Pie drawn inside a panel whose top-left corner is (x0, 0).
std::string pie_group(const RoundResult& round, double x0) {
    const double cx = x0 + kPanelWidth / 2.0;
    const double cy = 60.0 + kPieRadius;
    std::string out = fmt::format("  <g data-round=\"{}\">\n", xml_escape(round.round_id));
    out += fmt::format("    <text x=\"{:.2f}\" y=\"30\" text-anchor=\"middle\" font-size=\"16\">{} ({})</text>\n", cx,
                       xml_escape(round.round_id), xml_escape(round.condition_name));

    const auto slices = pie_slices(round);
    std::size_t color_index = 0;
    double legend_y = cy + kPieRadius + 40.0;
    const VoteShares shares = percentages(round.tally);
    for (const auto& slice : slices) {
        std::string_view color;
        double display = 0.0;
        if (slice.id == kAbstainRowId) {
            color = kAbstainColor;
            display = shares.abstain.display;
        } else if (slice.id == kUnparseableRowId) {
            color = kUnparseableColor;
            display = shares.unparseable.display;
        } else {
            color = kPalette[color_index++ % std::size(kPalette)];
            display = shares.display_share(slice.id);
        }

        if (slice.sweep_degrees >= 360.0 - 1e-9) {
            out += fmt::format(
                "    <circle cx=\"{:.4f}\" cy=\"{:.4f}\" r=\"{:.4f}\" fill=\"{}\" data-id=\"{}\" data-angle=\"{:.6f}\"/>\n",
                cx, cy, kPieRadius, color, xml_escape(slice.id), slice.sweep_degrees);
        } else {
            const double a0 = (slice.start_degrees - 90.0) * std::numbers::pi / 180.0;
            const double a1 = (slice.start_degrees + slice.sweep_degrees - 90.0) * std::numbers::pi / 180.0;
            out += fmt::format(
                "    <path d=\"M {:.4f} {:.4f} L {:.4f} {:.4f} A {:.4f} {:.4f} 0 {} 1 {:.4f} {:.4f} Z\" fill=\"{}\" "
                "stroke=\"#ffffff\" data-id=\"{}\" data-angle=\"{:.6f}\"/>\n",
                cx, cy, cx + kPieRadius * std::cos(a0), cy + kPieRadius * std::sin(a0), kPieRadius, kPieRadius,
                slice.sweep_degrees > 180.0 ? 1 : 0, cx + kPieRadius * std::cos(a1), cy + kPieRadius * std::sin(a1),
                color, xml_escape(slice.id), slice.sweep_degrees);
        }
        out += fmt::format(
            "    <rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"12\" height=\"12\" fill=\"{}\"/>"
            "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"13\">{} {}%</text>\n",
            x0 + 40.0, legend_y - 11.0, color, x0 + 58.0, legend_y, xml_escape(slice.label), format_share(display));
        legend_y += 20.0;
    }
    out += "  </g>\n";
    return out;
}

std::string svg_document(const std::vector<const RoundResult*>& rounds) {
    const double width = kPanelWidth * static_cast<double>(std::max<std::size_t>(rounds.size(), 1));
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{:.0f}\" height=\"{:.0f}\" "
        "viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\">\n",
        width, kPanelHeight, width, kPanelHeight);
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        out += pie_group(*rounds[i], kPanelWidth * static_cast<double>(i));
    }
    out += "</svg>\n";
    return out;
}

std::string emit_json(const ElectionResults& results) {
    nlohmann::json json = results_to_json(results);
    for (std::size_t i = 0; i < results.rounds.size(); ++i) {
        const auto& round = results.rounds[i];
        auto& entry = json["rounds"][i];
        entry["ballots"] = {{"count", round.tally.total_ballots},
                            {"file", round.round_id + ".ballots.jsonl"}};
        if (round.tally.total_ballots == 0) continue;
        const VoteShares shares = percentages(round.tally);
        nlohmann::json share_map = nlohmann::json::object();
        for (const auto& s : shares.candidates) share_map[s.id] = s.display;
        entry["shares"] = std::move(share_map);
        entry["abstain_share"] = shares.abstain.display;
        entry["unparseable_share"] = shares.unparseable.display;
    }
    return json.dump(2) + "\n";
}

std::string emit_csv(const ElectionResults& results) {
    std::string out = "round_id,candidate_id,count,share_pct\n";
    for (const auto& round : results.rounds) {
        if (round.tally.total_ballots == 0) {
            for (const auto& [id, count] : round.tally.counts) {
                out += fmt::format("{},{},{},{}\n", csv_field(round.round_id), csv_field(id), count, "0.0");
            }
            continue;
        }
        const VoteShares shares = percentages(round.tally);
        for (const auto& s : shares.candidates) {
            out += fmt::format("{},{},{},{}\n", csv_field(round.round_id), csv_field(s.id), s.count,
                               format_share(s.display));
        }
        out += fmt::format("{},{},{},{}\n", csv_field(round.round_id), kUnparseableRowId, shares.unparseable.count,
                           format_share(shares.unparseable.display));
        out += fmt::format("{},{},{},{}\n", csv_field(round.round_id), kAbstainRowId, shares.abstain.count,
                           format_share(shares.abstain.display));
    }
    return out;
}

std::string emit_text(const ElectionResults& results) {
    std::string out;
    for (const auto& round : results.rounds) {
        out += fmt::format("Round {} ({}): {} ballots\n", round.round_id, round.condition_name,
                           round.tally.total_ballots);
        if (round.tally.total_ballots == 0) {
            out += "  (no ballots)\n\n";
            continue;
        }
        const VoteShares shares = percentages(round.tally);
        std::vector<std::array<std::string, 3>> rows;
        for (const auto& s : shares.candidates) {
            rows.push_back({display_name_of(round, s.id) + " [" + s.id + "]", std::to_string(s.count),
                            format_share(s.display) + "%"});
        }
        rows.push_back({"(unparseable)", std::to_string(shares.unparseable.count),
                        format_share(shares.unparseable.display) + "%"});
        rows.push_back({"(abstain)", std::to_string(shares.abstain.count), format_share(shares.abstain.display) + "%"});

        std::size_t name_width = 9;
        std::size_t count_width = 5;
        for (const auto& row : rows) {
            name_width = std::max(name_width, row[0].size());
            count_width = std::max(count_width, row[1].size());
        }
        out += fmt::format("  {:<{}}  {:>{}}  {:>6}\n", "Candidate", name_width, "Votes", count_width, "Share");
        for (const auto& row : rows) {
            out += fmt::format("  {:<{}}  {:>{}}  {:>6}\n", row[0], name_width, row[1], count_width, row[2]);
        }
        const Decision decision = decide_winner(round.tally);
        if (decision.winner) {
            out += fmt::format("  Winner: {}\n\n", display_name_of(round, *decision.winner));
        } else {
            std::string names;
            for (const auto& id : decision.tied) names += (names.empty() ? "" : ", ") + display_name_of(round, id);
            out += fmt::format("  Tie: {}\n\n", names);
        }
    }
    return out;
}

}  // namespace

double VoteShares::display_share(const std::string& candidate_id) const {
    for (const auto& s : candidates) {
        if (s.id == candidate_id) return s.display;
    }
    return 0.0;
}

double round_share(std::int64_t count, std::int64_t total) {
    if (total <= 0) throw EmptyTally();
    // tenths = round_half_away(1000 * count / total); counts are non-negative.
    const std::int64_t tenths = (2000 * count + total) / (2 * total);
    return static_cast<double>(tenths) / 10.0;
}

VoteShares percentages(const RoundTally& tally) {
    if (tally.total_ballots <= 0) throw EmptyTally();
    VoteShares shares;
    shares.total_ballots = tally.total_ballots;
    for (const auto& [id, count] : tally.counts) shares.candidates.push_back(make_share(id, count, tally.total_ballots));
    std::stable_sort(shares.candidates.begin(), shares.candidates.end(),
                     [](const Share& a, const Share& b) { return a.count > b.count; });
    shares.abstain = make_share(std::string(kAbstainRowId), tally.abstentions, tally.total_ballots);
    shares.unparseable = make_share(std::string(kUnparseableRowId), tally.unparseable, tally.total_ballots);
    return shares;
}

std::vector<PieSlice> pie_slices(const RoundResult& round) {
    const VoteShares shares = percentages(round.tally);
    const double total = static_cast<double>(shares.total_ballots);
    std::vector<PieSlice> slices;
    double start = 0.0;
    auto add = [&](const std::string& id, const std::string& label, std::int64_t count) {
        if (count == 0) return;
        const double sweep = 360.0 * static_cast<double>(count) / total;
        slices.push_back({id, label, start, sweep});
        start += sweep;
    };
    for (const auto& s : shares.candidates) add(s.id, display_name_of(round, s.id), s.count);
    add(std::string(kUnparseableRowId), "Unparseable", shares.unparseable.count);
    add(std::string(kAbstainRowId), "Abstain", shares.abstain.count);
    return slices;
}

ReportFormat parse_report_format(const std::string& name) {
    if (name == "json") return ReportFormat::kJson;
    if (name == "csv") return ReportFormat::kCsv;
    if (name == "svg-pie") return ReportFormat::kSvgPie;
    if (name == "text") return ReportFormat::kText;
    throw UnsupportedFormat(name);
}

std::string emit_report(const ElectionResults& results, ReportFormat format) {
    switch (format) {
        case ReportFormat::kJson: return emit_json(results);
        case ReportFormat::kCsv: return emit_csv(results);
        case ReportFormat::kText: return emit_text(results);
        case ReportFormat::kSvgPie: {
            std::vector<const RoundResult*> rounds;
            for (const auto& round : results.rounds) {
                if (round.tally.total_ballots > 0) rounds.push_back(&round);
            }
            return svg_document(rounds);
        }
    }
    throw UnsupportedFormat("?");
}

std::string emit_report(const ElectionResults& results, const std::string& format) {
    return emit_report(results, parse_report_format(format));
}

std::string render_pie_svg(const RoundResult& round) { return svg_document({&round}); }

std::map<std::string, RoundTally> tallies_from_csv(std::string_view csv) {
    std::map<std::string, RoundTally> tallies;
    const auto rows = parse_csv(csv);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 4) {
            throw ParseError("<csv>", i + 1, 1, "expected 4 columns, got " + std::to_string(row.size()));
        }
        std::int64_t count = 0;
        try {
            count = std::stoll(row[2]);
        } catch (const std::exception&) {
            throw ParseError("<csv>", i + 1, 3, "count is not an integer");
        }
        RoundTally& tally = tallies[row[0]];
        if (row[1] == kAbstainRowId) {
            tally.abstentions = count;
        } else if (row[1] == kUnparseableRowId) {
            tally.unparseable = count;
        } else {
            tally.counts[row[1]] = count;
        }
        tally.total_ballots += count;
    }
    return tallies;
}

}  // namespace crowdvote
