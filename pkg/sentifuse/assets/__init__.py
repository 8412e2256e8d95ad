"""
Packaged data files - default stopword list and lemmatizer tables.

stopwords.txt          one lowercase word per line
lemma_rules.tsv        suffix<TAB>replacement; the longest matching suffix wins
lemma_exceptions.tsv   word<TAB>lemma; consulted before the suffix rules

Lines starting with '#' and blank lines are ignored in all three files.
"""
