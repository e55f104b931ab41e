#pragma once

#include <string>
#include <vector>

namespace trajscope {

enum class Label : int { Natural = 0, Artifact = 1 };

const char* to_string(Label label) noexcept;
Label label_from_string(const std::string& s);

/// One similarity trajectory with its annotation. `group` holds the prompt
/// identifier when trajectories were generated per prompt; it may be empty.
struct LabeledTrajectory {
    std::string id;
    Label label = Label::Natural;
    std::vector<double> values;
    std::string group;
};

using Dataset = std::vector<LabeledTrajectory>;

/// Throws InvalidInput unless every trajectory has the same non-zero length.
std::size_t common_length(const Dataset& data);

std::size_t count_label(const Dataset& data, Label label);

}  // namespace trajscope
