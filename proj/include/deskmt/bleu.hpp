#pragma once

#include <string>
#include <vector>

namespace deskmt {

// mteval-13a tokenization: SGML entity unescaping, punctuation splitting with
// the digit-context rules for '.', ',' and '-'. Case is preserved.
std::vector<std::string> tokenize_13a(const std::string& line);

// Corpus-level BLEU in [0, 100]: case-sensitive, 13a tokenization, n-gram
// orders 1..4, exponential smoothing of zero match counts, standard brevity
// penalty. Single reference per hypothesis.
double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

// Same scorer on pre-tokenized input (no 13a pass).
double bleu_tokenized(const std::vector<std::vector<std::string>>& hypotheses,
                      const std::vector<std::vector<std::string>>& references);

}  // namespace deskmt
