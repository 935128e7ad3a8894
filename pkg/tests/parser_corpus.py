"""Curated final-stage response variants with expected (label, status) pairs.

Each case: (name, attribute, raw_text, expected_label, expected_status).
Used by both the parser unit tests and the acceptance suite.
"""

CLEAN = "clean"
REPAIRED = "repaired"
UNPARSED_STATUS = "unparsed"

FULL_BLOCK = """Looking at the evidence carefully.

PREDICTION: Middle
CONFIDENCE: 4
INDICATORS: 5,4,6,5,3
ALTERNATIVES: Low, Upper-middle
REASONING: Mid-range venues dominate the weekly record."""

CORPUS = [
    # --- clean machine-readable blocks -------------------------------------
    ("minimal_block", "income", "PREDICTION: Middle", "Middle", CLEAN),
    ("full_block", "income", FULL_BLOCK, "Middle", CLEAN),
    ("block_without_indicators", "income",
     "PREDICTION: Low\nCONFIDENCE: 3\nREASONING: budget venues.", "Low", CLEAN),
    ("block_lowercase_keys", "income",
     "prediction: High\nconfidence: 2", "High", CLEAN),
    ("block_markdown_bold_keys", "income",
     "**PREDICTION:** Upper-middle\n**CONFIDENCE:** 4", "UpperMiddle", CLEAN),
    ("block_display_name", "income",
     "PREDICTION: Very high\nCONFIDENCE: 5", "VeryHigh", CLEAN),
    ("block_canonical_identifier", "income",
     "PREDICTION: VeryLow\nCONFIDENCE: 1", "VeryLow", CLEAN),
    ("block_name_with_range", "income",
     "PREDICTION: Middle $35k-$75k\nCONFIDENCE: 3", "Middle", CLEAN),
    ("block_inside_code_fence", "income",
     "```\nPREDICTION: Low\nCONFIDENCE: 2\n```", "Low", CLEAN),
    ("block_extra_prose_around", "income",
     "Let me think.\nThe venues skew budget.\n\nPREDICTION: Very Low\nCONFIDENCE: 4\n\nThanks!",
     "VeryLow", CLEAN),
    ("block_last_prediction_wins", "income",
     "PREDICTION: Low\nWait, reconsidering...\nPREDICTION: High\nCONFIDENCE: 3", "High", CLEAN),
    ("block_spaced_colon", "income", "PREDICTION : Middle\nCONFIDENCE : 2", "Middle", CLEAN),
    ("block_markdown_value", "income", "PREDICTION: **Middle**\nCONFIDENCE: 3", "Middle", CLEAN),
    ("block_crlf_endings", "income",
     "PREDICTION: Upper-middle\r\nCONFIDENCE: 4\r\n", "UpperMiddle", CLEAN),
    ("block_confidence_fraction", "income",
     "PREDICTION: Middle\nCONFIDENCE: 3/5", "Middle", CLEAN),
    ("block_duplicate_alternatives_deduped", "income",
     "PREDICTION: Middle\nALTERNATIVES: Low, Low, High", "Middle", CLEAN),
    ("block_primary_dropped_from_alternatives", "income",
     "PREDICTION: Middle\nALTERNATIVES: Middle, Low", "Middle", CLEAN),
    ("age_block", "age", "PREDICTION: 25-44\nCONFIDENCE: 4", "25-44", CLEAN),
    ("age_block_synonym", "age", "PREDICTION: under 25\nCONFIDENCE: 2", "Under25", CLEAN),
    ("age_block_65plus", "age", "PREDICTION: 65+\nCONFIDENCE: 3", "65plus", CLEAN),
    ("education_block", "education", "PREDICTION: Bachelors\nCONFIDENCE: 4", "Bachelors", CLEAN),
    ("education_block_synonym", "education",
     "PREDICTION: master's degree\nCONFIDENCE: 5", "Graduate", CLEAN),
    ("education_block_no_hs", "education",
     "PREDICTION: less than high school\nCONFIDENCE: 2", "NoHighSchool", CLEAN),
    # --- repaired: clamps and block damage ----------------------------------
    ("confidence_clamped_high", "income",
     "PREDICTION: Middle\nCONFIDENCE: 9", "Middle", REPAIRED),
    ("confidence_clamped_zero", "income",
     "PREDICTION: Middle\nCONFIDENCE: 0", "Middle", REPAIRED),
    ("confidence_clamped_negative", "income",
     "PREDICTION: Low\nCONFIDENCE: -2", "Low", REPAIRED),
    ("confidence_not_a_number", "income",
     "PREDICTION: Low\nCONFIDENCE: fairly sure", "Low", REPAIRED),
    ("indicator_clamped", "income",
     "PREDICTION: High\nINDICATORS: 11,1,7,3,8", "High", REPAIRED),
    ("indicator_zero_clamped", "income",
     "PREDICTION: High\nINDICATORS: 5,0,6,5,3", "High", REPAIRED),
    ("indicators_too_few", "income",
     "PREDICTION: Middle\nINDICATORS: 5,4,6", "Middle", REPAIRED),
    ("indicators_too_many", "income",
     "PREDICTION: Middle\nINDICATORS: 5,4,6,5,3,2", "Middle", REPAIRED),
    ("alternative_unparseable", "income",
     "PREDICTION: Middle\nALTERNATIVES: Low, Stratospheric", "Middle", REPAIRED),
    ("prediction_garbage_prose_recovers", "income",
     "PREDICTION: N/A\nBut overall this reads as a low income profile.", "Low", REPAIRED),
    ("prediction_ambiguous_last_mention_recovers", "income",
     "PREDICTION: middle or upper-middle", "UpperMiddle", REPAIRED),
    # --- repaired: prose-only fallbacks -------------------------------------
    ("prose_upper_middle_with_range", "income",
     "Given the venues, the income is most likely upper-middle ($75k-$125k) here.",
     "UpperMiddle", REPAIRED),
    ("prose_low", "income", "The person appears to be low income overall.", "Low", REPAIRED),
    ("prose_very_high", "income", "I would guess very high earnings.", "VeryHigh", REPAIRED),
    ("prose_range_only_middle", "income", "An income range of $35k-$75k fits best.", "Middle", REPAIRED),
    ("prose_range_only_high", "income", "Probably between $125k-$200k annually.", "High", REPAIRED),
    ("prose_range_over_200k", "income", "Earnings look to be >$200k.", "VeryHigh", REPAIRED),
    ("prose_last_mention_wins", "income",
     "At first glance low, but the spa visits suggest high instead.", "High", REPAIRED),
    ("prose_ambiguous_only_text", "income", "middle to upper-middle", "UpperMiddle", REPAIRED),
    ("prose_age_bracket", "age", "The rhythm suggests someone 45-64 years old.", "45-64", REPAIRED),
    ("prose_age_over_65", "age", "Retirement patterns: likely over 65.", "65plus", REPAIRED),
    ("prose_education_bachelors", "education",
     "This person probably holds a bachelor's degree.", "Bachelors", REPAIRED),
    ("prose_education_no_hs_longest_match", "education",
     "Most consistent with no high school completion.", "NoHighSchool", REPAIRED),
    ("prose_education_hs", "education", "Likely finished high school only.", "HighSchool", REPAIRED),
    ("prose_education_some_college", "education",
     "Evening classes point to some college exposure.", "SomeCollege", REPAIRED),
    # --- unparsed ------------------------------------------------------------
    ("unrelated_text", "income", "The weather in the narrative week was probably mild.",
     "Unparsed", UNPARSED_STATUS),
    ("empty_string", "income", "", "Unparsed", UNPARSED_STATUS),
    ("whitespace_only", "income", "   \n\t  \n", "Unparsed", UNPARSED_STATUS),
    ("empty_prediction_value", "income", "PREDICTION:\nCONFIDENCE: 3", "Unparsed", UNPARSED_STATUS),
    ("number_only", "income", "42", "Unparsed", UNPARSED_STATUS),
    ("non_latin_text", "income", "категория неизвестна, 判断できません", "Unparsed", UNPARSED_STATUS),
    ("near_miss_vocabulary", "income", "Definitely an upper class lifestyle.", "Unparsed", UNPARSED_STATUS),
    ("unmapped_dollar_amount", "income", "Makes about $500k a year.", "Unparsed", UNPARSED_STATUS),
    ("wrong_attribute_vocabulary", "income",
     "Looks like a 45-64 year old on weekends.", "Unparsed", UNPARSED_STATUS),
    ("high_school_is_not_high_income", "income",
     "She finished high school and works downtown.", "Unparsed", UNPARSED_STATUS),
    ("middle_school_is_not_middle_income", "income",
     "Drops kids at the middle school every morning.", "Unparsed", UNPARSED_STATUS),
    ("json_garbage", "income", '{"pred": null, "conf": []}', "Unparsed", UNPARSED_STATUS),
    ("age_text_for_education", "education", "Probably around 30 years old.", "Unparsed", UNPARSED_STATUS),
]
