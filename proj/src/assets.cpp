#include "tokshap/assets.hpp"

namespace tokshap {

const std::vector<std::string>& sample_corpus() {
    static const std::vector<std::string> corpus = {
        "Give three tips for staying healthy",
        "Explain why the sky appears blue during the day",
        "Describe the water cycle in simple terms",
        "List five uses for a paperclip",
        "Summarize the plot of Romeo and Juliet",
        "What are the primary colors",
        "Translate good morning into French",
        "Write a haiku about autumn leaves",
        "How does photosynthesis work",
        "Name the largest planet in our solar system",
        "Suggest a healthy breakfast for a busy student",
        "Explain the difference between weather and climate",
        "What causes earthquakes",
        "Describe how to make a paper airplane",
        "Why do cats purr",
        "Give an example of a renewable energy source",
        "Explain how vaccines protect against disease",
        "What is the capital of Australia",
        "Describe the rules of chess briefly",
        "How do airplanes stay in the air",
        "List three famous impressionist painters",
        "What is the boiling point of water at sea level",
        "Explain the concept of supply and demand",
        "Describe a rainbow to someone who cannot see",
        "Why is exercise important for mental health",
        "Name two countries that border Switzerland",
        "Explain how a compass works",
        "What makes the ocean salty",
        "Describe the life cycle of a butterfly",
        "Suggest a title for a story about a lost dog",
    };
    return corpus;
}

const std::vector<std::string>& default_word_pool() {
    static const std::vector<std::string> pool = {
        "zugzwang",     "quixotic",   "borborygmus", "widdershins", "snollygoster",
        "mumpsimus",    "xylotomous", "brontide",    "petrichor",   "vexillology",
        "zephyrine",    "quokka",     "grawlix",     "skeuomorph",  "blatherskite",
        "frumious",     "galimatias", "jentacular",  "kerfuffle",   "limerence",
        "absquatulate", "yclept",     "vorpaline",   "snickersnee",
    };
    return pool;
}

const std::string& prompt_engineer_template_v1() {
    static const std::string tmpl =
        "You are scoring word importance for a prompt given to an AI assistant.\n"
        "For each numbered word below, output an integer from 0 to 100 rating how\n"
        "much that word matters to the meaning of the prompt. 0 means filler, 100\n"
        "means critical. Output exactly one integer per word, in order, separated\n"
        "by commas, and nothing else.\n"
        "\n"
        "Example 1\n"
        "Prompt: summarize this article briefly\n"
        "Words: 1. summarize 2. this 3. article 4. briefly\n"
        "Output: 95,20,90,55\n"
        "\n"
        "Example 2\n"
        "Prompt: what is the capital of France\n"
        "Words: 1. what 2. is 3. the 4. capital 5. of 6. France\n"
        "Output: 55,15,10,95,15,100\n"
        "\n"
        "Now score this prompt.\n"
        "Prompt: {prompt}\n"
        "Words: {words}\n"
        "Output:";
    return tmpl;
}

const std::string& prompt_engineer_retry_suffix() {
    static const std::string suffix =
        "\n\nYour previous reply was not parseable. Output exactly {n} integers\n"
        "between 0 and 100, separated by commas, with no other text.";
    return suffix;
}

}  // namespace tokshap
