#pragma once

#include <optional>
#include <string>

#include "crowdvote/backend.hpp"
#include "crowdvote/persona.hpp"

namespace crowdvote {

/// A response source competing in a round. Prompted candidates carry a
/// persona; zero-shot candidates may carry a bare system prompt; fixture
/// candidates usually carry neither.
struct CandidateEntry {
    std::string candidate_id;
    std::string display_name;
    BackendDescriptor backend;
    std::optional<PersonaSpec> persona;
    std::optional<std::string> system_prompt;

    /// Compiled persona prompt, else the bare system prompt, else "".
    std::string resolved_system_prompt() const;
};

}  // namespace crowdvote
