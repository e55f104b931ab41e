#include "trajscope/dataset.hpp"

#include <algorithm>

#include "trajscope/error.hpp"

namespace trajscope {

const char* to_string(Label label) noexcept { return label == Label::Artifact ? "artifact" : "natural"; }

Label label_from_string(const std::string& s) {
    if (s == "artifact") return Label::Artifact;
    if (s == "natural") return Label::Natural;
    fail(ErrorKind::SchemaError, "label must be \"artifact\" or \"natural\", got \"" + s + "\"");
}

std::size_t common_length(const Dataset& data) {
    require(!data.empty(), "dataset is empty");
    const std::size_t n = data.front().values.size();
    require(n > 0, "trajectory " + data.front().id + " is empty");
    for (const auto& t : data) require(t.values.size() == n, "trajectory " + t.id + " has a different length");
    return n;
}

std::size_t count_label(const Dataset& data, Label label) {
    return static_cast<std::size_t>(
        std::count_if(data.begin(), data.end(), [&](const auto& t) { return t.label == label; }));
}

}  // namespace trajscope
