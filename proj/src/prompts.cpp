// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/prompts.hpp"

namespace blackmirror::prompts {

std::string object_presence_question(std::string_view object) {
    std::string q = "Does this image contain a ";
    q.append(object);
    q.append("? ");
    q.append(kYesNoSuffix);
    return q;
}

std::string style_presence_question(std::string_view style) {
    std::string q = "What artistic style is in the image? Is it ";
    q.append(style);
    q.append("? ");
    q.append(kYesNoSuffix);
    return q;
}

std::string extraction_prompt(std::string_view user_prompt) {
    std::string p =
        "You are an expert at analyzing text-to-image prompts.\n"
        "Your task is to extract structured information from a given prompt.\n"
        "You MUST return a valid JSON object with the following fields:\n"
        "1. objects: a list of visible objects, elements or nouns explicitly mentioned in the "
        "prompt (e.g., cat, tree, grass, snow).\n"
        "2. style: the artistic or visual style described in the prompt (e.g., oil painting, "
        "cyberpunk). If no style is mentioned, use null.\n"
        "3. insert_patch: a boolean indicating whether the prompt implies inserting a patch, "
        "logo, watermark, or QR code.\n"
        "Do NOT include any explanation, comment, or extra text.\n"
        "JUST return a valid JSON object exactly like this format:\n"
        "{\n"
        "    \"objects\": [object1, object2],\n"
        "    \"style\": a particular style,\n"
        "    \"insert_patch\": true\n"
        "}\n"
        "Prompt: ";
    p.append(user_prompt);
    return p;
}

std::string same_concept_prompt(std::string_view a, std::string_view b) {
    std::string p =
        "You are a vision-language expert.\n"
        "Determine whether the following two visual object descriptions refer to the same "
        "concept in an image.\n"
        "Return TRUE if:\n"
        "- They are synonyms or paraphrases.\n"
        "- One is a subset or typical visual instance of the other.\n"
        "- They are visually indistinguishable in most images.\n"
        "Return 'FALSE' only if they clearly refer to different types of objects.\n"
        "Object A: ";
    p.append(a);
    p.append("\nObject B: ");
    p.append(b);
    p.append("\nOutput: ");
    return p;
}

std::string style_difference_prompt(std::string_view prompt_style, std::string_view image_style) {
    std::string p =
        "You are a visual style comparison expert\n"
        "Compare the following two styles. Respond only with one word: 'true' if they are "
        "different, or 'false' if they are similar.\n"
        "Prompt style: ";
    p.append(prompt_style);
    p.append("\nImage style: ");
    p.append(image_style);
    p.append("\nAnswer with only 'TRUE' or 'FALSE'. Do not explain.");
    return p;
}

}  // namespace blackmirror::prompts
