#pragma once

// Explanation text templates with [slot_name] placeholders. Built-in texts
// can be replaced at runtime by a directory of <name>.txt files.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace xmcts {

using SlotMap = std::map<std::string, std::string, std::less<>>;

inline const std::map<std::string, std::string, std::less<>>& builtin_templates() {
    static const std::map<std::string, std::string, std::less<>> t = {
        {"factual_intro",
         "The passenger has specified a desired [stop_noun] time of [desired_time]. In order to determine the "
         "most efficient route, the Monte Carlo Tree Search (MCTS) route planning algorithm simulates "
         "approximately [scenario_count] potential future scenarios and requests. This thorough exploration "
         "helps the algorithm to make an informed recommendation."},
        {"factual_late",
         "Potential Late Arrival: Based on the extensive set of scenarios examined by MCTS, there's a chance "
         "that the passenger might encounter a delay in their [stop_noun] time. This anticipated delay averages "
         "around [avg_degree] minutes. The primary reason for this delay is that the proposed vehicle is "
         "expected to make stops at about [stop_count] other locations prior to reaching the passenger's "
         "[stop_noun] point. However, the delay can be as short as [min_degree] minutes or extend up to "
         "[max_degree] minutes. The percentage of times the suggested vehicle doesn't meet the desired "
         "[stop_noun] time is about [violation_pct]%."},
        {"factual_early",
         "Potential Early Arrival: Based on the extensive set of scenarios examined by MCTS, the passenger might "
         "reach their [stop_noun] point ahead of the desired time. This early arrival averages around "
         "[avg_degree] minutes beyond the allowed window. The proposed vehicle is expected to make stops at "
         "about [stop_count] other locations prior to reaching the passenger's [stop_noun] point. The early "
         "arrival can be as short as [min_degree] minutes or extend up to [max_degree] minutes. The percentage "
         "of times the suggested vehicle arrives earlier than the desired [stop_noun] time allows is about "
         "[violation_pct]%."},
        {"factual_satisfied",
         "No Expected Violation: Across the examined scenarios, the suggested vehicle is not expected to make "
         "the passenger's [stop_noun] [deviation]. The proposed vehicle is expected to make stops at about "
         "[stop_count] other locations prior to reaching the passenger's [stop_noun] point."},
        {"contrastive_scores",
         "The MCTS route planning algorithm provides recommendations based on a simulation of various future "
         "scenarios. It assesses the potential outcomes of assigning a specific request to different vehicles "
         "by assigning them \"scores.\" When comparing this alternative vehicle to the recommended one, the "
         "latter has a composite score of [recommended_score], while the former scored at [alternative_score]. "
         "This lower score exhibited by the alternative vehicle suggests suboptimal performance, making it less "
         "favorable for the task at hand."},
        {"contrastive_close",
         "The MCTS route planning algorithm provides recommendations based on a simulation of various future "
         "scenarios. It assesses the potential outcomes of assigning a specific request to different vehicles "
         "by assigning them \"scores.\" The alternative vehicle scored [alternative_score] against "
         "[recommended_score] for the recommended one, so it is not a weaker choice on score alone. The "
         "recommended vehicle was preferred because it was explored in [recommended_visits] simulated "
         "scenarios, compared with [alternative_visits] for the alternative."},
        {"contrastive_reasons_two", "Why is the recommended vehicle better? Here are two main reasons:"},
        {"contrastive_reasons_one", "Why is the recommended vehicle better? Here is the main reason:"},
        {"contrastive_more_trips",
         "More Trips: The recommended vehicle demonstrates a more than [service_rate_improvement]% enhancement "
         "in the service rate, meaning that it can possibly handle more trips without getting overwhelmed."},
        {"contrastive_on_time",
         "On-Time Service: The recommended vehicle demonstrates a more than [punctuality_improvement]% "
         "enhancement in the punctuality, meaning that passengers are more likely to get to their destination "
         "right on time."},
        {"contrastive_hard_intro",
         "The MCTS route planning algorithm only recommends assignments that respect every hard constraint. "
         "Assigning the passenger to the alternative vehicle fails this check:"},
        {"contrastive_capacity",
         "Capacity Limit: The alternative vehicle would carry up to [max_degree] more passengers than its "
         "capacity allows, which happens in [violation_pct]% of the examined scenarios."},
        {"contrastive_fuel",
         "Fuel Limit: The alternative vehicle's route would need up to [max_degree] more minutes of driving "
         "than its fuel allows, which happens in [violation_pct]% of the examined scenarios."},
        {"expansion_intro",
         "To answer your query, our MCTS route planning system dove deeper into its decision-making process. "
         "It examines various possible \"futures\" to provide more information about the alternative plan."},
        {"expansion_scenarios",
         "More Scenarios Analyzed: MCTS looked at [new_iterations] new future traffic and route situations that "
         "it hadn't considered before."},
        {"expansion_still_worse",
         "Results from the New Analysis: Even with this deeper look, the system found that the alternate plan "
         "still wasn't the best choice overall."},
        {"expansion_competitive",
         "Results from the New Analysis: With this deeper look, the alternate plan scores at least as well as "
         "the recommended one."},
        {"expansion_timing",
         "In the specific situation you asked about, the passenger might arrive too [deviation], by about "
         "[avg_degree] minutes. Consistency Check: To ensure the consistency of this information, we checked "
         "how often this [deviation] [stop_noun] happens in all the new scenarios: this happens in "
         "[violation_pct]% of them."},
        {"expansion_hard",
         "In the specific situation you asked about, the alternate plan would exceed the vehicle's capacity by "
         "up to [max_degree] passengers. Consistency Check: this happens in [violation_pct]% of the new "
         "scenarios."},
        {"expansion_fuel",
         "In the specific situation you asked about, the alternate plan would need up to [max_degree] more "
         "minutes of driving than the vehicle's fuel allows. Consistency Check: this happens in "
         "[violation_pct]% of the new scenarios."},
        {"expansion_clear",
         "In the specific situation you asked about, no late or early arrival was found. Consistency Check: none "
         "of the new scenarios showed a timing violation for this passenger."},
    };
    return t;
}

class TemplateSet {
public:
    TemplateSet() : texts_(builtin_templates()) {}

    // Overrides built-ins with every <name>.txt in `dir` (trailing newline trimmed).
    static TemplateSet from_directory(const std::filesystem::path& dir) {
        TemplateSet set;
        if (!std::filesystem::is_directory(dir)) throw InvalidInput("template directory not found: " + dir.string());
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() != ".txt") continue;
            std::ifstream in(entry.path(), std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            std::string text = ss.str();
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
            set.texts_[entry.path().stem().string()] = std::move(text);
        }
        return set;
    }

    const std::string& text(std::string_view name) const {
        auto it = texts_.find(name);
        if (it == texts_.end()) throw TemplateError("unknown template '" + std::string(name) + "'", std::string(name));
        return it->second;
    }

    std::string render(std::string_view name, const SlotMap& slots) const { return fill(text(name), slots); }

    // Replaces each [slot] with its value; brackets around anything that is
    // not a lowercase identifier are kept verbatim.
    static std::string fill(std::string_view tmpl, const SlotMap& slots) {
        std::string out;
        out.reserve(tmpl.size() + 64);
        std::size_t i = 0;
        while (i < tmpl.size()) {
            if (tmpl[i] == '[') {
                std::size_t j = i + 1;
                while (j < tmpl.size() && (std::islower(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) ++j;
                if (j < tmpl.size() && tmpl[j] == ']' && j > i + 1) {
                    std::string_view name = tmpl.substr(i + 1, j - i - 1);
                    auto it = slots.find(name);
                    if (it == slots.end())
                        throw TemplateError("missing slot '" + std::string(name) + "'", std::string(name));
                    out += it->second;
                    i = j + 1;
                    continue;
                }
            }
            out += tmpl[i++];
        }
        return out;
    }

private:
    std::map<std::string, std::string, std::less<>> texts_;
};

} // namespace xmcts
