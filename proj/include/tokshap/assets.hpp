#pragma once

#include <string>
#include <vector>

namespace tokshap {

// Bundled 30-prompt instruction-style corpus used when a corpus file is not
// supplied ("--corpus sample").
const std::vector<std::string>& sample_corpus();

// Default injection word pool: rare English words plus pronounceable
// nonsense, unlikely to collide with corpus vocabulary.
const std::vector<std::string>& default_word_pool();

// Few-shot template for the prompt-engineer baseline, version 1. Placeholders
// {prompt} and {words} are filled per request; {n} is used by the stricter
// retry instruction.
const std::string& prompt_engineer_template_v1();

// Appended to the template on the single retry after an unparseable reply.
const std::string& prompt_engineer_retry_suffix();

}  // namespace tokshap
