//! Curated keyword lists used by the default prompt.

pub const ABUSIVE: &[&str] = &["দালাল", "টিভি", "ফালতু", "চোর", "মিথ্যা", "পাগল", "জুতা", "লজ্জা", "আমিন"];

pub const PROFANE: &[&str] = &[
    "বাল",
    "মাগি",
    "খানকি",
    "বেশ্যা",
    "দফা",
    "বাচ্চা",
    "সালা",
    "শালা",
    "মাদারচোদ",
    "কুত্তা",
    "জারজ",
    "পোলা",
    "শুয়োর",
];

pub const RELIGIOUS_HATE: &[&str] = &[
    "মুসলিম",
    "হিন্দু",
    "ইহুদি",
    "মুসলমান",
    "গজব",
    "ধর্ম",
    "ইসলাম",
    "কাফের",
    "মসজিদ",
    "ধর্মীয়",
    "মোল্লা",
    "আব্বাছ",
];

pub const POLITICAL_HATE: &[&str] = &[
    "ভোট",
    "বিএনপি",
    "আওয়ামী",
    "লীগ",
    "সরকার",
    "নির্বাচন",
    "হাসিনা",
    "অবৈধ",
    "জনগণ",
    "পার্টি",
    "দল",
    "চোর",
    "রাজনীতি",
];

pub const SEXISM: &[&str] = &[
    "নারী",
    "পরকিয়া",
    "মহিলা",
    "পুরুষ",
    "হিজরা",
    "বিয়ে",
    "লিঙ্গ",
    "হোটেল",
    "মেয়ে",
    "বেড়া",
    "আবাসিক",
];
