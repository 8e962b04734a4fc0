#pragma once

#include <memory>
#include <string>

#include "maro/provider.hpp"

namespace maro {

/// Offline stand-in for a hosted model. Every reply is a pure function of
/// the request, so runs are reproducible without recorded transcripts.
///
/// The judge predicts from surface cues in the query ("shocking", "secret",
/// "officials said", ...) and then flips its answer with a probability that
/// depends on a hash of the decision rule, so different rules score
/// differently on the same tasks. The optimizer returns rule text derived
/// from a hash of its prompt and sample tag.
struct SyntheticOptions {
    /// Judge error rates are spread uniformly over [min, max] across rules.
    double min_noise = 0.05;
    double max_noise = 0.45;
    /// Share of judge replies that carry no parsable verdict.
    double unparsable_rate = 0.02;
};

std::string synthetic_reply(const ChatRequest& request, const SyntheticOptions& options = {});

std::shared_ptr<ScriptedMock> make_synthetic_mock(const SyntheticOptions& options = {});

}  // namespace maro
