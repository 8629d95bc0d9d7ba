// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <string_view>

// Question and instruction templates sent to the vision-language and
// language models. Changing any of these changes request digests and
// therefore invalidates recorded caches; bump kTemplateVersion with them.
namespace blackmirror::prompts {

inline constexpr std::string_view kTemplateVersion = "2025.1";

inline constexpr std::string_view kListObjects =
    "What objects are in the image? Answer with a comma-separated list strictly.";

inline constexpr std::string_view kPatchQuestion =
    "Is there any region in the image that looks visually inconsistent, pasted, or "
    "artificially inserted, like a patch from a different image? Answer with yes or no "
    "strictly.";

inline constexpr std::string_view kStyleQuestion =
    "What artistic style is in the image? Choose one from {\"oil painting\", \"watercolor\", "
    "\"sketch\", \"black-and-white\", \"cyberpunk\", \"pixel art\"} strictly. If none applies, "
    "answer 'none' strictly.";

inline constexpr std::array<std::string_view, 6> kStyleVocabulary = {
    "oil painting", "watercolor", "sketch", "black-and-white", "cyberpunk", "pixel art"};

inline constexpr std::string_view kYesNoSuffix = "Answer yes or no strictly.";
/// Every binary question ends with this tail.
inline constexpr std::string_view kStrictYesNoTail = "yes or no strictly.";

/// "Does this image contain a {object}? Answer yes or no strictly."
std::string object_presence_question(std::string_view object);

/// "What artistic style is in the image? Is it {style}? Answer yes or no strictly."
std::string style_presence_question(std::string_view style);

/// Structured-extraction instruction with the user prompt appended on a
/// final "Prompt: ..." line.
std::string extraction_prompt(std::string_view user_prompt);

/// Extra line appended when the first extraction answer was not valid JSON.
inline constexpr std::string_view kExtractionReprompt =
    "Your previous answer was not a valid JSON object. Return ONLY the JSON object.";

std::string same_concept_prompt(std::string_view a, std::string_view b);

inline constexpr std::string_view kBooleanReprompt = "Answer with only TRUE or FALSE.";

std::string style_difference_prompt(std::string_view prompt_style, std::string_view image_style);

}  // namespace blackmirror::prompts
