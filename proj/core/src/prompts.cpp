#include "facet/prompts.hpp"

namespace facet::prompts {
namespace {

constexpr std::string_view kAssistant = "You are a helpful assistant.";
constexpr std::string_view kAiAssistant = "You are a helpful AI assistant";

std::string quoted(std::string_view text) {
    std::string out = "\"";
    out += text;
    out += "\"";
    return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& line : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

} // namespace

std::string with_reminder(std::string_view user_prompt, std::string_view reminder) {
    std::string out(user_prompt);
    out += "\n\n";
    out += reminder;
    return out;
}

Prompt generic_caption() {
    return {std::string(kAiAssistant), "Describe the following image in detail."};
}

Prompt grid_proposal(std::size_t grid_side, std::size_t criteria_count) {
    std::string images = std::to_string(grid_side * grid_side);
    std::string side = std::to_string(grid_side);
    std::string count = std::to_string(criteria_count);
    std::string user;
    user += "This image contains " + images + " individual images arranged in " + side +
            " columns and " + side + " rows.\n";
    user += "I am a machine learning researcher trying to identify all the possible clustering "
            "criteria or rules that could be used to group these images so I can better "
            "understand my data.\n";
    user += "Your job is to carefully analyze the entire set of the " + images +
            " images, and identify " + count +
            " distinct clustering criteria or rules that could be used to cluster or group "
            "these images. Please consider different characteristics.\n";
    user += "Please write a list of the " + count +
            " identified clustering criteria or rules (separated by bullet points \"*\").\n";
    user += "Again, I want to identify all the possible clustering criteria or rules that could "
            "be used to group these images. List the " + count +
            " distinct clustering criteria or rules that you identified from the " + images +
            " images. Answer with a list (separated by bullet points \"*\"). Your response:";
    return {std::string(kAiAssistant), std::move(user)};
}

Prompt caption_proposal(const std::vector<std::string>& captions, std::size_t criteria_count) {
    std::string count = std::to_string(criteria_count);
    std::string user = "The following are the result of captioning a set of images:\n";
    for (std::size_t i = 0; i < captions.size(); ++i)
        user += "Image " + std::to_string(i + 1) + ": " + quoted(captions[i]) + "\n";
    user += "I am a machine learning researcher trying to figure out the potential clustering "
            "or grouping criteria that exist in these images. So I can better understand my "
            "data and group them into different clusters based on different criteria.\n";
    user += "Come up with " + count + " distinct clustering criteria that exist in this set of "
            "images.\n";
    user += "Please write a list of clustering criteria (separated by bullet points \"*\").\n";
    user += "Again I want to figure out what are the potential clustering/grouping criteria "
            "that I can use to group these images into different clusters. List " + count +
            " clustering or grouping criteria that often exist in this set of images based on "
            "the captioning results. Answer with a list (separated by bullet points \"*\"). "
            "Your response:";
    return {std::string(kAssistant), std::move(user)};
}

Prompt tag_proposal(const std::vector<std::vector<std::string>>& tags_per_image) {
    std::string user =
        "The following are the tagging results of a set of images in the format of \"Image ID: "
        "tag 1, tag 2, ..., tag 10\". These assigned tags reflect the visible semantic content "
        "of each image:\n";
    for (std::size_t i = 0; i < tags_per_image.size(); ++i) {
        std::string joined;
        for (const auto& tag : tags_per_image[i]) {
            if (!joined.empty()) joined += ", ";
            joined += tag;
        }
        user += "Image " + std::to_string(i + 1) + ": " + quoted(joined) + "\n";
    }
    user += "I am a machine learning researcher trying to figure out the potential clustering "
            "or grouping criteria that exist in these images. So I can better understand my "
            "data and group them into different clusters based on different criteria.\n";
    user += "Please analyze these images by using their assigned tags. Come up with an array of "
            "distinct clustering criteria that exist in this set of images.\n";
    user += "Please write a list of clustering criteria (separated by bullet points \"*\").\n";
    user += "Again, I want to figure out what are the potential clustering or grouping criteria "
            "that I can use to group these images into different clusters. List an array of "
            "clustering or grouping criteria that often exist in this set of images based on "
            "the tagging results. Answer with a list (separated by bullet points \"*\"). Your "
            "response:";
    return {std::string(kAssistant), std::move(user)};
}

Prompt pool_refinement(const std::vector<std::string>& criterion_names) {
    std::string user =
        "I am a machine learning researcher working with a set of images. I aim to cluster "
        "this set of images based on the various clustering criteria present within them. "
        "Below is a preliminary list of clustering criteria that I've discovered to group "
        "these images:\n";
    for (std::size_t i = 0; i < criterion_names.size(); ++i)
        user += "* Criterion " + std::to_string(i + 1) + ": " + quoted(criterion_names[i]) + "\n";
    user += "My goal is to refine this list by merging similar criteria and rephrasing them "
            "using more precise and informative terms. This will help create a set of "
            "distinct, optimized clustering criteria.\n";
    user += "Your task is to first review and understand the initial list of clustering "
            "criteria provided. Then, assist me in refining this list by: * Merging similar "
            "criteria. * Expressing each criterion more clearly and informatively.\n";
    user += "Please respond with the cleaned and optimized list of clustering criteria, "
            "formatted as bullet points (using \"*\"). Your response:";
    return {std::string(kAssistant), std::move(user)};
}

Prompt criterion_caption(std::string_view criterion) {
    std::string c = quoted(criterion);
    std::string user = "Analyze the image focusing specifically on the " + c +
                       ". Provide a detailed description of the " + c +
                       " depicted in the image. Highlight key elements and interactions "
                       "relevant to the " + c + " that enhance the understanding of the scene.\n";
    user += "Your response:";
    return {"You are a helpful AI assistant.", std::move(user)};
}

Prompt initial_naming(std::string_view criterion, std::string_view caption) {
    std::string c = quoted(criterion);
    std::string user = "The following is the description about the " + c + " of an image:\n";
    user += quoted(caption) + "\n";
    user += "I am a machine learning researcher trying to assign a label to this image based on "
            "what is the " + c + " depicted in this image.\n";
    user += "Understand the provided description carefully and assign a label to this image "
            "based on what is the " + c + " depicted in this image.\n";
    user += "Please respond in the following format within five words: \"*Answer*\". Do not "
            "talk about the description and do not respond long sentences. The answer should "
            "be within five words.\n";
    user += "Again, your job is to understand the description and assign a label to this image "
            "based on what is the " + c + " shown in this image. Your response:";
    return {std::string(kAssistant), std::move(user)};
}

namespace {

std::string refinement_preamble(const std::string& c,
                                const std::vector<std::string>& initial_names) {
    std::string user = "The following is an initial list of " + c +
                       " categories. These categories might not be at the same semantic "
                       "granularity level. For example, category 1 could be \"cutting "
                       "vegetables\", while category 2 is simply \"cutting\". In this case, "
                       "category 1 is more specific than category 2.\n";
    std::vector<std::string> lines;
    lines.reserve(initial_names.size());
    for (const auto& name : initial_names) lines.push_back("* " + quoted(name));
    user += join_lines(lines);
    return user;
}

} // namespace

Prompt hierarchy_refinement(std::string_view criterion,
                            const std::vector<std::string>& initial_names) {
    std::string c = quoted(criterion);
    std::string user = refinement_preamble(c, initial_names);
    user += "Your job is to generate a three-level class hierarchy (class taxonomy, where the "
            "first level contains more abstract or general coarse-grained classes, the third "
            "level contains more specific fine-grained classes, and the second level contains "
            "intermediate mid-grained classes) of " + c + " based on the provided list of " + c +
            " categories.\n";
    user += "Follow these steps to generate the hierarchy: "
            "Step 1 - Understand the provided initial list of " + c +
            " categories. The following three-level class hierarchy generation steps are all "
            "based on the provided initial list. "
            "Step 2 - Generate a list of abstract or general " + c +
            " categories as the first level of the class hierarchy, covering all the concepts "
            "present in the initial list. "
            "Step 3 - Generate a list of middle-grained " + c +
            " categories as the second level of the class hierarchy, in which the "
            "middle-grained categories are the subcategories of the categories in the first "
            "level. The categories in the second-level are more specific than the first level "
            "but should still cover and reflect all the concepts present in the initial list. "
            "Step 4 - Generate a list of more specific fine-grained " + c +
            " categories as the third level of the class hierarchy, in which the categories "
            "should reflect more specific " + c +
            " concepts that you can infer from the initial list. The categories in the "
            "third-level are subcategories of the second-level. "
            "Step 5 - Output the generated three-level class hierarchy as a JSON object where "
            "the keys are the level numbers and the values are a flat list of generated "
            "categories at each level, structured like: { \"level 1\": [\"categories\"], "
            "\"level 2\": [\"categories\"], \"level 3\": [\"categories\"] }\n";
    user += "Please only output the JSON object in your response and simply use a flat list to "
            "store the generated categories at each level. Your response:";
    return {std::string(kAssistant), std::move(user)};
}

Prompt flat_refinement(std::string_view criterion, const std::vector<std::string>& initial_names) {
    std::string c = quoted(criterion);
    std::string user = refinement_preamble(c, initial_names);
    user += "Your job is to refine this initial list into a single flat list of " + c +
            " categories at one consistent semantic granularity level, merging duplicates and "
            "near-duplicates, so that the refined categories cover all the concepts present in "
            "the initial list.\n";
    user += "Please respond with the refined list of categories, formatted as bullet points "
            "(using \"*\"). Your response:";
    return {std::string(kAssistant), std::move(user)};
}

Prompt final_assignment(std::string_view criterion, std::string_view caption,
                        const std::vector<std::string>& candidates) {
    std::string c = quoted(criterion);
    std::string user = "The following is a detailed description about the " + c +
                       " of an image.\n";
    user += quoted(caption) + "\n";
    user += "Based on the content and details provided in the description, classify the image "
            "into one of the specified " + c + " categories listed below:\n";
    user += c + " categories:\n";
    std::vector<std::string> lines;
    lines.reserve(candidates.size());
    for (const auto& name : candidates) lines.push_back("* " + quoted(name));
    user += join_lines(lines);
    user += "Ensure that your classification adheres to the details mentioned in the image "
            "description. Respond with the classification result in the following format: "
            "\"*category name*\". Your response:";
    return {std::string(kAssistant), std::move(user)};
}

Prompt vqa_question_generation(std::string_view criterion) {
    std::string c = quoted(criterion);
    std::string user = "Hello! I am a machine learning researcher focusing on image "
                       "categorization based on the aspect of " + c + " depicted in images.\n";
    user += "Therefore, I need your assistance in designing a prompt for the Visual Question "
            "Answering (VQA) model to help it identify the " + c +
            " category in a given image at three different granularity. Please help me design "
            "and generate this prompt using the following template: \"Question: [Generated VQA "
            "Prompt Question] Answer (reply with an abstract, a common, and a specific "
            "category name, respectively):\". The generated prompt should be simple and "
            "straightforward.\n";
    user += "Please respond with only the generated prompt using the following format "
            "\"* Answer *\". Your response:";
    return {std::string(kAssistant), std::move(user)};
}

Prompt mid_tag_generation(std::string_view criterion) {
    std::string c = quoted(criterion);
    std::string user = "Hello! I am a machine learning researcher focusing on image "
                       "categorization of a certain aspect. I'm interested in generating a "
                       "list of tags specifically for categorizing the types of " + c +
                       " depicted in images.\n";
    user += "Please provide a list of potential " + c +
            " category names. Please generate diverse category names. Do not include too "
            "general or specific category names such as \"Sports\".\n";
    user += "Please respond with the list of category names. Each category should be formatted "
            "as follows: \"* Category Name\". Your response:";
    return {std::string(kAssistant), std::move(user)};
}

Prompt coarse_tag_expansion(std::string_view criterion, std::string_view mid_tag) {
    std::string c = quoted(criterion);
    std::string user = "Generate a list of three more abstract or general " + c +
                       " super-categories that the following " + c +
                       " category belongs to and output the list separated by \"&\" (without "
                       "numbers): " + quoted(mid_tag) + "\n";
    user += "Your response:";
    return {std::string(kAssistant), std::move(user)};
}

Prompt fine_tag_expansion(std::string_view criterion, std::string_view mid_tag) {
    std::string c = quoted(criterion);
    std::string user = "Generate a list of ten more detailed or specific " + c +
                       " sub-categories of the following " + c +
                       " category and output the list separated by \"&\" (without numbers): " +
                       quoted(mid_tag) + "\n";
    user += "Your response:";
    return {std::string(kAssistant), std::move(user)};
}

} // namespace facet::prompts
