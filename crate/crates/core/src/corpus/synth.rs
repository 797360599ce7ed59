//! Seeded synthetic corpus with ground truth.
//!
//! Machine senders of each category draw words from a category pool plus
//! shared boilerplate and background words; human senders exchange short
//! conversational messages with replies. Recipients move a share of machine
//! mail into folders named after the category (or into noisy personal
//! folders), which is what the labeling stage later votes with.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::category::Category;
use crate::corpus::canonical::{canonical_address, WILDCARD};
use crate::corpus::message::{Actions, Message};
use crate::error::{Error, Result};
use crate::io::{read_records, split_fields, write_file};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    /// Number of senders per true category.
    pub senders: BTreeMap<Category, usize>,
    /// Target fraction of messages sent by human senders.
    pub human_share: f64,
    /// Probability that a recipient of a foldered sender moves a message.
    pub folder_user_share: f64,
    /// Words per category pool, including the seed words.
    pub pool_size: usize,
    /// Size of the background pool shared by every sender.
    pub background_size: usize,
    /// Share of machine senders running a campaign of more than 100 messages in one hour.
    pub burst_share: f64,
    pub burst_range: (u32, u32),
    /// Share of machine senders that send all their mail within one hour.
    pub campaign_share: f64,
    /// Share of machine senders that also emit human-style messages.
    pub mixed_sender_share: f64,
    /// Share of a mixed sender's messages that are human-style.
    pub mixed_message_share: f64,
    /// Share of machine senders whose topical words partly come from a
    /// second category.
    pub blend_share: f64,
    /// Fraction of a blended sender's topical words drawn from the second category.
    pub blend_mix: f64,
    pub start_ts: i64,
    pub days: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig::with_total_senders(10_000, 7)
    }
}

impl SynthConfig {
    /// Default category mix scaled to `total` senders.
    pub fn with_total_senders(total: usize, seed: u64) -> Self {
        let mix = [
            (Category::Human, 0.30),
            (Category::Shopping, 0.18),
            (Category::Financial, 0.14),
            (Category::Travel, 0.14),
            (Category::Career, 0.12),
            (Category::Social, 0.07),
            (Category::Other, 0.05),
        ];
        let mut senders = BTreeMap::new();
        let mut assigned = 0;
        for (i, (cat, share)) in mix.iter().enumerate() {
            let n = if i + 1 == mix.len() {
                total.saturating_sub(assigned)
            } else {
                ((total as f64) * share).round() as usize
            };
            assigned += n;
            senders.insert(*cat, n.max(1));
        }
        SynthConfig {
            seed,
            senders,
            human_share: 0.1,
            folder_user_share: 0.5,
            pool_size: 120,
            background_size: 300,
            burst_share: 0.08,
            burst_range: (101, 140),
            campaign_share: 0.2,
            mixed_sender_share: 0.02,
            mixed_message_share: 0.1,
            blend_share: 0.3,
            blend_mix: 0.4,
            start_ts: 1_356_998_400,
            days: 180,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.senders.is_empty() {
            return Err(Error::config("no sender categories requested"));
        }
        for (cat, n) in &self.senders {
            if *n == 0 {
                return Err(Error::config(format!("zero senders requested for {cat}")));
            }
        }
        if !(self.human_share > 0.0 && self.human_share < 1.0) {
            return Err(Error::config("human_share must be in (0,1)"));
        }
        for (name, v) in [
            ("folder_user_share", self.folder_user_share),
            ("burst_share", self.burst_share),
            ("campaign_share", self.campaign_share),
            ("mixed_sender_share", self.mixed_sender_share),
            ("mixed_message_share", self.mixed_message_share),
            ("blend_share", self.blend_share),
            ("blend_mix", self.blend_mix),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} must be in [0,1]")));
            }
        }
        if self.burst_range.0 > self.burst_range.1 || self.days == 0 {
            return Err(Error::config("invalid burst range or window"));
        }
        Ok(())
    }
}

/// True categories of the synthetic senders and messages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    /// Canonical sender to category.
    pub senders: BTreeMap<String, Category>,
    /// Messages whose category differs from their sender's (mixed-sender injections).
    pub message_overrides: BTreeMap<String, Category>,
    pub mixed_senders: BTreeSet<String>,
}

impl GroundTruth {
    pub fn message_category(&self, msg: &Message) -> Option<Category> {
        if let Some(c) = self.message_overrides.get(&msg.id) {
            return Some(*c);
        }
        let canonical = canonical_address(&msg.sender).ok()?;
        self.senders.get(&canonical).copied()
    }

    pub fn sender_category(&self, canonical: &str) -> Option<Category> {
        self.senders.get(canonical).copied()
    }

    pub fn senders_to_string(&self) -> String {
        let mut out = String::from("# canonical_sender\tcategory\n");
        for (s, c) in &self.senders {
            out.push_str(&format!("{s}\t{c}\n"));
        }
        out
    }

    pub fn overrides_to_string(&self) -> String {
        let mut out = String::from("# message_id\tcategory\n");
        for (m, c) in &self.message_overrides {
            out.push_str(&format!("{m}\t{c}\n"));
        }
        out
    }

    pub fn write(&self, senders_path: &Path, overrides_path: &Path) -> Result<()> {
        write_file(senders_path, &self.senders_to_string())?;
        write_file(overrides_path, &self.overrides_to_string())
    }

    pub fn read(senders_path: &Path, overrides_path: Option<&Path>) -> Result<Self> {
        let mut truth = GroundTruth::default();
        for (line, rec) in read_records(senders_path)? {
            let f = split_fields(&rec, 2, line)?;
            let cat = f[1].parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
            truth.senders.insert(f[0].to_string(), cat);
        }
        if let Some(p) = overrides_path {
            for (line, rec) in read_records(p)? {
                let f = split_fields(&rec, 2, line)?;
                let cat = f[1].parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
                truth.message_overrides.insert(f[0].to_string(), cat);
            }
        }
        Ok(truth)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub messages: Vec<Message>,
    pub truth: GroundTruth,
}

const HUMAN_SEEDS: &[&str] = &[
    "read", "today", "great", "much", "want", "wish", "make", "think", "love", "tonight",
    "dinner", "weekend", "family", "thanks", "talk", "call", "later", "miss", "hope", "fun",
    "kids", "home", "soon", "night", "tomorrow", "morning", "party", "birthday", "mom", "dad",
    "sorry", "glad", "happy", "guess", "maybe", "pretty", "yeah", "okay", "coffee", "lunch",
];
const CAREER_SEEDS: &[&str] = &[
    "job", "jobs", "apply", "search", "career", "exp", "national", "capital", "recruitment",
    "manager", "resume", "hiring", "interview", "position", "candidate", "salary", "employer",
    "opportunity", "applicants", "recruiter", "openings", "skills", "experience", "hire",
];
const SHOPPING_SEEDS: &[&str] = &[
    "shipping", "items", "deals", "sale", "order", "purchases", "shop", "customer", "offer",
    "cart", "discount", "store", "shipped", "delivery", "coupon", "price", "save", "product",
    "returns", "brand", "arrivals", "checkout", "clearance", "outlet",
];
const TRAVEL_SEEDS: &[&str] = &[
    "travel", "hotel", "deals", "per", "book", "flights", "details", "travelzoo", "stay",
    "hotels", "flight", "booking", "reservation", "airline", "itinerary", "destination",
    "trip", "vacation", "fare", "airport", "cruise", "resort", "rental", "nights",
];
const FINANCIAL_SEEDS: &[&str] = &[
    "information", "bank", "card", "payment", "service", "credit", "contact", "customer",
    "security", "chase", "statement", "account", "balance", "transaction", "banking", "due",
    "amount", "loan", "insurance", "tax", "deposit", "bill", "fraud", "interest",
];
const SOCIAL_SEEDS: &[&str] = &[
    "post", "comment", "messages", "photo", "invited", "attention", "twitter", "shared",
    "replied", "followers", "friend", "tagged", "profile", "connections", "likes", "group",
    "wall", "network", "invitation", "status", "notifications", "commented", "mentioned",
    "birthday",
];
const OTHER_SEEDS: &[&str] = &[
    "newsletter", "issue", "weekly", "digest", "stories", "article", "events", "community",
    "school", "church", "survey", "news", "edition", "volume", "tips", "recipe", "health",
    "club", "members", "meeting",
];
const BOILERPLATE: &[&str] = &[
    "unsubscribe", "click", "view", "browser", "privacy", "policy", "email", "preferences",
    "copyright", "rights", "reserved", "manage", "subscription", "receive", "address",
    "please", "visit", "terms", "link", "online", "mobile", "app", "download", "follow",
    "inc", "unsubscribed", "mailing", "list", "automatically", "generated",
];
const BACKGROUND_SEEDS: &[&str] = &[
    "time", "day", "new", "get", "one", "see", "like", "also", "back", "first", "way",
    "work", "know", "people", "year", "good", "use", "find", "give", "take", "come", "look",
    "thing", "two", "last", "next", "week", "month", "best", "need", "help", "world", "life",
    "right", "place", "still", "every", "part", "long", "little", "big", "high", "old",
    "start", "show", "keep", "let", "last", "number", "today", "check", "free", "full",
    "latest", "special", "top", "available", "find", "year",
];

const WEBMAIL: &[&str] = &[
    "gmail.com", "yahoo.com", "hotmail.com", "aol.com", "outlook.com", "comcast.net",
    "att.net", "ymail.com",
];
const SURNAMES: &[&str] = &[
    "smith", "johnson", "williams", "brown", "jones", "garcia", "miller", "davis",
    "rodriguez", "martinez", "hernandez", "lopez", "gonzalez", "wilson", "anderson",
    "taylor", "moore", "jackson", "martin", "lee", "perez", "thompson", "white", "harris",
    "sanchez", "clark", "ramirez", "lewis", "robinson", "walker", "young", "allen", "king",
    "wright", "scott", "torres", "nguyen", "hill", "flores", "green", "adams", "nelson",
    "baker", "hall", "rivera", "campbell", "mitchell", "carter", "roberts", "turner",
];

fn seeds(cat: Category) -> &'static [&'static str] {
    match cat {
        Category::Human => HUMAN_SEEDS,
        Category::Career => CAREER_SEEDS,
        Category::Shopping => SHOPPING_SEEDS,
        Category::Travel => TRAVEL_SEEDS,
        Category::Financial => FINANCIAL_SEEDS,
        Category::Social => SOCIAL_SEEDS,
        Category::Other => OTHER_SEEDS,
    }
}

fn sender_names(cat: Category) -> &'static [&'static str] {
    match cat {
        Category::Shopping => &[
            "orders", "order-update", "shipping", "store", "deals", "sales", "customerservice",
            "shop", "offers", "rewards", "auto-confirm", "outlet",
        ],
        Category::Financial => &[
            "billing", "statements", "alerts", "payroll", "payments", "accounts", "bank",
            "customerservice", "invest", "tax", "onlinebanking", "cards",
        ],
        Category::Travel => &[
            "reservations", "booking", "itinerary", "flights", "traveldesk", "hotels", "trips",
            "checkin", "deals", "vacations", "fares", "cruises",
        ],
        Category::Career => &[
            "careers", "jobs", "recruiting", "talent", "jobalerts", "hiring", "resume", "hr",
            "jobsearch", "recruiter", "staffing",
        ],
        Category::Social => &[
            "notification", "update", "friends", "groups", "invitations", "community",
            "messages", "notify", "members", "social",
        ],
        Category::Other | Category::Human => &[
            "info", "newsletter", "news", "digest", "hello", "team", "contact", "editor",
            "weekly", "events",
        ],
    }
}

const GENERIC_NAMES: &[&str] = &["noreply", "no-reply", "info", "news", "mail", "support", "service", "hello", "team"];

fn domain_hints(cat: Category) -> &'static [&'static str] {
    match cat {
        Category::Shopping => &["shop", "store", "mart", "outlet", "boutique"],
        Category::Financial => &["bank", "pay", "credit", "invest", "fin"],
        Category::Travel => &["air", "hotel", "trip", "travel", "tours"],
        Category::Career => &["jobs", "hire", "career", "talent", "work"],
        Category::Social => &["social", "connect", "friends", "net", "club"],
        Category::Other | Category::Human => &["news", "info", "media", "daily", "digest"],
    }
}

fn folder_pool(cat: Category) -> &'static [&'static str] {
    match cat {
        Category::Shopping => &[
            "shopping", "orders", "receipts", "purchases", "online orders", "ebay", "amazon",
            "online shopping", "order confirmations", "coupons", "compras", "gifts", "deals",
            "bestbuy", "sales", "target", "wishlist",
        ],
        Category::Financial => &[
            "bills", "bank", "banking", "finance", "bank statements", "credit cards", "financial",
            "taxes", "billpay", "credit", "bill payments", "car insurance", "mortgage",
            "statements", "money", "paypal", "accounts",
        ],
        Category::Travel => &[
            "travel", "hotels", "flights", "hotel reservations", "travel confirmations",
            "airlines", "voyages", "air tickets", "trip confirmations", "business travel",
            "vacation", "trips", "expedia", "cruise", "aaa.com",
        ],
        Category::Career => &[
            "jobs", "job search", "career", "resumes", "recruiters", "job applications",
            "employment", "cv", "job hunt", "recruitment", "interviews", "job stuff", "monster",
            "work stuff",
        ],
        Category::Social => &[
            "facebook", "social", "groups", "twitter", "social networks", "myspace", "pinterest",
            "yahoo groups", "social network", "fb", "linkedin", "network", "instagram",
        ],
        Category::Other => &[
            "school", "church", "surveys", "jokes", "college", "education", "cooking",
            "newsletters", "news", "recipes", "hobbies",
        ],
        Category::Human => &[
            "friends", "family", "personal", "mom", "dad", "kids", "wedding", "mom and dad",
            "old friends",
        ],
    }
}

const NOISE_FOLDERS: &[&str] = &[
    "important", "keep", "saved", "misc", "2013", "personal", "archive", "old", "save",
    "mom and dad", "to do",
];
const THIRD_PARTY: &[&str] = &["otherinbox", "oi deals"];

/// Word pools used by the generator.
#[derive(Debug, Clone)]
pub struct WordPools {
    pub categories: BTreeMap<Category, Vec<String>>,
    pub boilerplate: Vec<String>,
    pub background: Vec<String>,
}

impl WordPools {
    pub fn generate(seed: u64, pool_size: usize, background_size: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
        let mut used: BTreeSet<String> = BTreeSet::new();
        for cat in Category::ALL {
            used.extend(seeds(cat).iter().map(|s| s.to_string()));
        }
        used.extend(BOILERPLATE.iter().map(|s| s.to_string()));
        used.extend(BACKGROUND_SEEDS.iter().map(|s| s.to_string()));
        used.extend(crate::resources::stopwords());
        let mut categories = BTreeMap::new();
        for cat in Category::ALL {
            let mut pool: Vec<String> = seeds(cat).iter().map(|s| s.to_string()).collect();
            while pool.len() < pool_size {
                pool.push(fresh_pseudo_word(&mut rng, &mut used));
            }
            categories.insert(cat, pool);
        }
        let mut background: Vec<String> = Vec::new();
        for w in BACKGROUND_SEEDS {
            if !background.iter().any(|b| b == w) {
                background.push(w.to_string());
            }
        }
        while background.len() < background_size {
            background.push(fresh_pseudo_word(&mut rng, &mut used));
        }
        WordPools {
            categories,
            boilerplate: BOILERPLATE.iter().map(|s| s.to_string()).collect(),
            background,
        }
    }
}

const CONSONANTS: &[u8] = b"bcdfghklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

fn pseudo_word<R: Rng>(rng: &mut R, syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
        w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
    }
    if rng.random_bool(0.4) {
        w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
    }
    w
}

fn fresh_pseudo_word<R: Rng>(rng: &mut R, used: &mut BTreeSet<String>) -> String {
    loop {
        let n = rng.random_range(2..=4);
        let w = pseudo_word(rng, n);
        if used.insert(w.clone()) {
            return w;
        }
    }
}

/// Zipf-weighted sampler over a word list (rank r has weight 1/(r+1)^0.9).
struct ZipfPool<'a> {
    words: &'a [String],
    index: WeightedIndex<f64>,
}

impl<'a> ZipfPool<'a> {
    fn new(words: &'a [String]) -> Self {
        let weights: Vec<f64> = (0..words.len()).map(|r| 1.0 / ((r + 1) as f64).powf(0.9)).collect();
        ZipfPool {
            words,
            index: WeightedIndex::new(weights).expect("non-empty pool"),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> &'a str {
        &self.words[self.index.sample(rng)]
    }
}

#[derive(Debug, Clone)]
enum NameStyle {
    Fixed(String),
    /// `stem+<digits>` with fresh digits per message.
    Tagged(String),
    /// A fresh random string per message.
    Random,
}

#[derive(Debug, Clone)]
struct SenderPlan {
    category: Category,
    style: NameStyle,
    domain: String,
    canonical: String,
    mixed: bool,
}

impl SenderPlan {
    fn address<R: Rng>(&self, rng: &mut R) -> String {
        match &self.style {
            NameStyle::Fixed(n) => format!("{n}@{}", self.domain),
            NameStyle::Tagged(stem) => {
                let digits = rng.random_range(1000..1_000_000u32);
                format!("{stem}+{digits}@{}", self.domain)
            }
            NameStyle::Random => loop {
                let s = random_token(rng);
                if crate::corpus::canonical::is_variable_token(&s) {
                    break format!("{s}@{}", self.domain);
                }
            },
        }
    }
}

fn random_token<R: Rng>(rng: &mut R) -> String {
    const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    let n = rng.random_range(10..=14);
    (0..n).map(|_| ALNUM[rng.random_range(0..ALNUM.len())] as char).collect()
}

struct Planner<'a> {
    rng: ChaCha8Rng,
    used_canonical: BTreeSet<String>,
    used_words: BTreeSet<String>,
    machine_domains: Vec<String>,
    corporate_domains: Vec<String>,
    first_names: &'a [String],
}

impl Planner<'_> {
    fn new_domain(&mut self, hint: Option<&str>) -> String {
        const TLDS: &[(&str, f64)] = &[("com", 0.7), ("net", 0.1), ("org", 0.08), ("co.uk", 0.07), ("de", 0.05)];
        loop {
            let n = self.rng.random_range(1..=2);
            let stem = pseudo_word(&mut self.rng, n);
            let tld_idx = WeightedIndex::new(TLDS.iter().map(|t| t.1)).unwrap().sample(&mut self.rng);
            let base = match hint {
                Some(h) if self.rng.random_bool(0.5) => format!("{h}{stem}"),
                Some(h) => format!("{stem}{h}"),
                None => stem,
            };
            let sub = match self.rng.random_range(0..10) {
                0 => "email.",
                1 => "mail.",
                2 => "e.",
                _ => "",
            };
            let d = format!("{sub}{base}.{}", TLDS[tld_idx].0);
            if self.used_words.insert(d.clone()) {
                return d;
            }
        }
    }

    fn machine_plan(&mut self, cat: Category) -> SenderPlan {
        let domain = if !self.machine_domains.is_empty() && self.rng.random_bool(0.3) {
            self.machine_domains[self.rng.random_range(0..self.machine_domains.len())].clone()
        } else {
            let hints = domain_hints(cat);
            let hint = if self.rng.random_bool(0.6) {
                Some(hints[self.rng.random_range(0..hints.len())])
            } else {
                None
            };
            let d = self.new_domain(hint);
            self.machine_domains.push(d.clone());
            d
        };
        for attempt in 0..50 {
            let roll: f64 = self.rng.random();
            let names = sender_names(cat);
            let base = if roll < 0.2 {
                GENERIC_NAMES[self.rng.random_range(0..GENERIC_NAMES.len())].to_string()
            } else {
                names[self.rng.random_range(0..names.len())].to_string()
            };
            let style = match self.rng.random_range(0..20) {
                0 => NameStyle::Random,
                1 | 2 => NameStyle::Tagged(base),
                _ if attempt > 5 => {
                    let n = self.rng.random_range(1..=2);
                    NameStyle::Fixed(format!("{base}.{}", pseudo_word(&mut self.rng, n)))
                }
                _ => NameStyle::Fixed(base),
            };
            let canonical = match &style {
                NameStyle::Fixed(n) => format!("{n}@{domain}"),
                NameStyle::Tagged(s) => format!("{s}+{WILDCARD}@{domain}"),
                NameStyle::Random => format!("{WILDCARD}@{domain}"),
            };
            if let NameStyle::Fixed(n) = &style {
                if canonical_address(&format!("{n}@{domain}")).ok().as_deref() != Some(canonical.as_str()) {
                    continue;
                }
            }
            if self.used_canonical.insert(canonical.clone()) {
                return SenderPlan { category: cat, style, domain, canonical, mixed: false };
            }
        }
        // Crowded domain: fall back to a fresh one.
        let d = self.new_domain(None);
        let canonical = format!("{}@{d}", sender_names(cat)[0]);
        self.used_canonical.insert(canonical.clone());
        SenderPlan {
            category: cat,
            style: NameStyle::Fixed(sender_names(cat)[0].to_string()),
            domain: d,
            canonical,
            mixed: false,
        }
    }

    fn human_plan(&mut self) -> SenderPlan {
        loop {
            let first = if self.rng.random_bool(0.7) {
                self.first_names[self.rng.random_range(0..self.first_names.len())].clone()
            } else {
                let n = self.rng.random_range(2..=3);
                pseudo_word(&mut self.rng, n)
            };
            let last = if self.rng.random_bool(0.6) {
                SURNAMES[self.rng.random_range(0..SURNAMES.len())].to_string()
            } else {
                let n = self.rng.random_range(2..=3);
                pseudo_word(&mut self.rng, n)
            };
            let name = match self.rng.random_range(0..20) {
                0..=8 => format!("{first}.{last}"),
                9 | 10 => format!("{first}_{last}"),
                11..=13 => format!("{}{last}{}", &first[..1], self.rng.random_range(10..99)),
                14..=16 => format!("{first}{last}"),
                _ => format!("{first}{}", self.rng.random_range(10..99)),
            };
            let roll: f64 = self.rng.random();
            let domain = if roll < 0.65 {
                WEBMAIL[self.rng.random_range(0..WEBMAIL.len())].to_string()
            } else if roll < 0.75 && !self.machine_domains.is_empty() {
                self.machine_domains[self.rng.random_range(0..self.machine_domains.len())].clone()
            } else {
                if self.corporate_domains.is_empty() || self.rng.random_bool(0.3) {
                    let hint = ["corp", "edu", "group", "law", "med"][self.rng.random_range(0..5)];
                    let d = self.new_domain(Some(hint));
                    self.corporate_domains.push(d);
                }
                self.corporate_domains[self.rng.random_range(0..self.corporate_domains.len())].clone()
            };
            let address = format!("{name}@{domain}");
            let canonical = match canonical_address(&address) {
                Ok(c) if c == address => c,
                _ => continue,
            };
            if self.used_canonical.insert(canonical.clone()) {
                return SenderPlan {
                    category: Category::Human,
                    style: NameStyle::Fixed(name),
                    domain,
                    canonical,
                    mixed: false,
                };
            }
        }
    }
}

/// Per-sender behavior drawn once.
struct Behavior {
    read: f64,
    deleted: f64,
    replied: f64,
    forwarded: f64,
    spam: f64,
    folder_affinity: f64,
    unsubscribe: f64,
    url_mean: f64,
    favorites: Vec<String>,
    blend: Option<(Category, f64)>,
}

fn machine_behavior<R: Rng>(rng: &mut R, cat: Category, pool: &[String], cfg: &SynthConfig) -> Behavior {
    let base_read = match cat {
        Category::Social => 0.55,
        Category::Financial => 0.6,
        Category::Travel => 0.45,
        Category::Career => 0.4,
        Category::Shopping => 0.35,
        _ => 0.3,
    };
    let foldered = if cat == Category::Other { 0.5 } else { 0.85 };
    let favorites = (0..5).map(|_| pool[rng.random_range(0..pool.len().min(60))].clone()).collect();
    Behavior {
        read: (base_read + rng.random_range(-0.15..0.15f64)).clamp(0.02, 0.95),
        deleted: rng.random_range(0.3..0.7),
        replied: rng.random_range(0.0..0.01),
        forwarded: rng.random_range(0.0..0.02),
        spam: if rng.random_bool(0.2) { rng.random_range(0.05..0.2) } else { rng.random_range(0.0..0.02) },
        folder_affinity: if rng.random_bool(foldered) { rng.random_range(0.5..1.0) } else { 0.0 },
        unsubscribe: if rng.random_bool(0.7) { rng.random_range(0.7..1.0) } else { rng.random_range(0.0..0.3) },
        url_mean: rng.random_range(0.5..6.0),
        favorites,
        blend: rng.random_bool(cfg.blend_share).then(|| {
            let others: Vec<Category> = Category::ALL.into_iter().filter(|c| *c != cat && *c != Category::Human).collect();
            (others[rng.random_range(0..others.len())], cfg.blend_mix)
        }),
    }
}

fn human_behavior<R: Rng>(rng: &mut R) -> Behavior {
    Behavior {
        read: rng.random_range(0.8..1.0),
        deleted: rng.random_range(0.0..0.2),
        replied: rng.random_range(0.15..0.5),
        forwarded: rng.random_range(0.0..0.1),
        spam: rng.random_range(0.0..0.005),
        folder_affinity: if rng.random_bool(0.3) { 0.3 } else { 0.0 },
        unsubscribe: 0.0,
        url_mean: 0.1,
        favorites: Vec::new(),
        blend: None,
    }
}

struct Draft {
    ts: i64,
    sender: String,
    subject: String,
    body: String,
    to: u32,
    actions: Actions,
    folder: Option<String>,
    human_style: bool,
    canonical: String,
}

struct TextGen<'a> {
    pools: BTreeMap<Category, ZipfPool<'a>>,
    boilerplate: ZipfPool<'a>,
    background: ZipfPool<'a>,
}

impl TextGen<'_> {
    fn topical<R: Rng>(&self, rng: &mut R, cat: Category, b: &Behavior) -> &str {
        match b.blend {
            Some((other, mix)) if rng.random_bool(mix) => self.pools[&other].sample(rng),
            _ => self.pools[&cat].sample(rng),
        }
    }

    fn machine_subject<R: Rng>(&self, rng: &mut R, cat: Category, b: &Behavior) -> String {
        let n = rng.random_range(4..=8);
        let mut words: Vec<String> = Vec::with_capacity(n + 1);
        for _ in 0..n {
            let r: f64 = rng.random();
            let w = if r < 0.3 {
                b.favorites[rng.random_range(0..b.favorites.len())].as_str()
            } else if r < 0.7 {
                self.topical(rng, cat, b)
            } else {
                self.background.sample(rng)
            };
            words.push(w.to_string());
        }
        if rng.random_bool(0.3) {
            words.push(format!("{}", rng.random_range(10..100_000)));
        }
        capitalize(words.join(" "))
    }

    fn machine_body<R: Rng>(&self, rng: &mut R, cat: Category, b: &Behavior, domain: &str) -> String {
        let n = rng.random_range(35..=80);
        let mut words: Vec<String> = Vec::with_capacity(n + 12);
        for i in 0..n {
            let r: f64 = rng.random();
            let w = if r < 0.3 {
                self.topical(rng, cat, b)
            } else if r < 0.4 {
                b.favorites[rng.random_range(0..b.favorites.len())].as_str()
            } else if r < 0.6 {
                self.boilerplate.sample(rng)
            } else {
                self.background.sample(rng)
            };
            words.push(w.to_string());
            if i % 11 == 10 {
                if let Some(last) = words.last_mut() {
                    last.push('.');
                }
            }
        }
        let urls = poisson_like(rng, b.url_mean);
        for _ in 0..urls {
            let pos = rng.random_range(0..=words.len());
            let n = rng.random_range(1..=2);
            words.insert(pos, format!("https://www.{domain}/{}", pseudo_word(rng, n)));
        }
        if rng.random_bool(b.unsubscribe) {
            words.push("to unsubscribe click here".to_string());
        }
        capitalize(words.join(" "))
    }

    fn human_subject<R: Rng>(&self, rng: &mut R) -> String {
        let n = rng.random_range(2..=5);
        let words: Vec<&str> = (0..n)
            .map(|_| {
                if rng.random_bool(0.6) {
                    self.pools[&Category::Human].sample(rng)
                } else {
                    self.background.sample(rng)
                }
            })
            .collect();
        let s = words.join(" ");
        match rng.random_range(0..100) {
            0..=34 => format!("Re: {s}"),
            35..=42 => format!("Fwd: {s}"),
            _ => capitalize(s),
        }
    }

    fn human_body<R: Rng>(&self, rng: &mut R) -> String {
        let n = rng.random_range(6..=40);
        let mut words: Vec<String> = (0..n)
            .map(|_| {
                if rng.random_bool(0.55) {
                    self.pools[&Category::Human].sample(rng).to_string()
                } else {
                    self.background.sample(rng).to_string()
                }
            })
            .collect();
        if rng.random_bool(0.05) {
            words.push(format!("http://www.{}.com", pseudo_word(rng, 2)));
        }
        capitalize(words.join(" "))
    }
}

fn capitalize(mut s: String) -> String {
    if let Some(first) = s.get(0..1) {
        let up = first.to_uppercase();
        s.replace_range(0..1, &up);
    }
    s
}

fn poisson_like<R: Rng>(rng: &mut R, mean: f64) -> usize {
    // Sum of Bernoulli trials: binomial(2*ceil(mean), mean / (2*ceil(mean))).
    let n = (mean.ceil() as usize).max(1) * 2;
    let p = (mean / n as f64).clamp(0.0, 1.0);
    (0..n).filter(|_| rng.random_bool(p)).count()
}

fn sender_seed(seed: u64, index: usize, salt: u64) -> u64 {
    let mut x = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index as u64)
        .wrapping_add(salt.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    x ^= x >> 31;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 29)
}

/// Generates a corpus; identical configs produce identical corpora.
pub fn generate_synthetic_corpus(cfg: &SynthConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let pools = WordPools::generate(cfg.seed, cfg.pool_size, cfg.background_size);
    let text = TextGen {
        pools: pools
            .categories
            .iter()
            .map(|(c, w)| (*c, ZipfPool::new(w)))
            .collect(),
        boilerplate: ZipfPool::new(&pools.boilerplate),
        background: ZipfPool::new(&pools.background),
    };
    let first_names: Vec<String> = crate::resources::first_names().into_iter().collect();
    let mut planner = Planner {
        rng: ChaCha8Rng::seed_from_u64(sender_seed(cfg.seed, 0, 1)),
        used_canonical: BTreeSet::new(),
        used_words: BTreeSet::new(),
        machine_domains: Vec::new(),
        corporate_domains: Vec::new(),
        first_names: &first_names,
    };

    // Interleave machine categories so that shared domains mix categories.
    let mut machine_queue: Vec<Category> = Vec::new();
    let mut remaining: BTreeMap<Category, usize> = cfg
        .senders
        .iter()
        .filter(|(c, _)| c.is_machine())
        .map(|(c, n)| (*c, *n))
        .collect();
    while remaining.values().any(|n| *n > 0) {
        for (c, n) in remaining.iter_mut() {
            if *n > 0 {
                machine_queue.push(*c);
                *n -= 1;
            }
        }
    }
    let mut plans: Vec<SenderPlan> = machine_queue.iter().map(|c| planner.machine_plan(*c)).collect();
    let n_mixed = (plans.len() as f64 * cfg.mixed_sender_share).round() as usize;
    let mut machine_idx: Vec<usize> = (0..plans.len()).collect();
    machine_idx.shuffle(&mut planner.rng);
    for &i in machine_idx.iter().take(n_mixed) {
        plans[i].mixed = true;
    }
    let n_machine = plans.len();
    let n_human = cfg.senders.get(&Category::Human).copied().unwrap_or(0);
    for _ in 0..n_human {
        let p = planner.human_plan();
        plans.push(p);
    }

    let window = cfg.days as i64 * 86_400;
    let mut drafts: Vec<(usize, Draft)> = Vec::new();
    // Machine senders first: their volume fixes the human budget.
    for (i, plan) in plans.iter().enumerate().take(n_machine) {
        let mut rng = ChaCha8Rng::seed_from_u64(sender_seed(cfg.seed, i, 2));
        let pool = &pools.categories[&plan.category];
        let b = machine_behavior(&mut rng, plan.category, pool, cfg);
        let roll: f64 = rng.random();
        let mut stamps: Vec<i64> = Vec::new();
        if roll < cfg.burst_share {
            let hour = rng.random_range(0..window / 3600) * 3600 + cfg.start_ts;
            let n = rng.random_range(cfg.burst_range.0..=cfg.burst_range.1);
            stamps.extend((0..n).map(|_| hour + rng.random_range(0..3600)));
            let extra = rng.random_range(2..=10);
            stamps.extend((0..extra).map(|_| cfg.start_ts + rng.random_range(0..window)));
        } else if roll < cfg.burst_share + cfg.campaign_share {
            let hour = rng.random_range(0..window / 3600) * 3600 + cfg.start_ts;
            let n = rng.random_range(12..=40);
            stamps.extend((0..n).map(|_| hour + rng.random_range(0..3600)));
        } else {
            let n = 3 + geometric(&mut rng, 0.13).min(37);
            stamps.extend((0..n).map(|_| cfg.start_ts + rng.random_range(0..window)));
        }
        let n_msgs = stamps.len();
        let n_human_style = if plan.mixed {
            ((n_msgs as f64) * cfg.mixed_message_share).round().max(1.0) as usize
        } else {
            0
        };
        let mut human_style_flags = vec![false; n_msgs];
        for f in human_style_flags.iter_mut().take(n_human_style) {
            *f = true;
        }
        human_style_flags.shuffle(&mut rng);
        let newsletter = rng.random_bool(0.1);
        for (ts, human_style) in stamps.into_iter().zip(human_style_flags) {
            let (subject, body) = if human_style {
                (text.human_subject(&mut rng), text.human_body(&mut rng))
            } else {
                (
                    text.machine_subject(&mut rng, plan.category, &b),
                    text.machine_body(&mut rng, plan.category, &b, &plan.domain),
                )
            };
            let to = if newsletter { rng.random_range(2..=200) } else { 1 };
            let (actions, folder) = recipient_actions(&mut rng, &b, plan.category, cfg.folder_user_share, false);
            drafts.push((
                i,
                Draft {
                    ts,
                    sender: plan.address(&mut rng),
                    subject,
                    body,
                    to,
                    actions,
                    folder,
                    human_style,
                    canonical: plan.canonical.clone(),
                },
            ));
        }
    }

    let machine_msgs = drafts.len();
    let human_budget =
        ((machine_msgs as f64) * cfg.human_share / (1.0 - cfg.human_share)).round() as usize;
    let human_counts = {
        let mut rng = ChaCha8Rng::seed_from_u64(sender_seed(cfg.seed, 0, 3));
        allocate(&mut rng, human_budget, n_human)
    };
    for (k, plan) in plans.iter().enumerate().skip(n_machine) {
        let mut rng = ChaCha8Rng::seed_from_u64(sender_seed(cfg.seed, k, 2));
        let b = human_behavior(&mut rng);
        for _ in 0..human_counts[k - n_machine] {
            let ts = cfg.start_ts + rng.random_range(0..window);
            let subject = text.human_subject(&mut rng);
            let body = text.human_body(&mut rng);
            let to = match rng.random_range(0..20) {
                0..=13 => 1,
                14..=18 => rng.random_range(2..=5),
                _ => rng.random_range(6..=12),
            };
            let (actions, folder) = recipient_actions(&mut rng, &b, Category::Human, cfg.folder_user_share, true);
            drafts.push((
                k,
                Draft {
                    ts,
                    sender: plan.address(&mut rng),
                    subject,
                    body,
                    to,
                    actions,
                    folder,
                    human_style: true,
                    canonical: plan.canonical.clone(),
                },
            ));
        }
    }

    drafts.sort_by(|a, b| a.1.ts.cmp(&b.1.ts).then(a.0.cmp(&b.0)));
    let mut truth = GroundTruth::default();
    for p in &plans {
        truth.senders.insert(p.canonical.clone(), p.category);
        if p.mixed {
            truth.mixed_senders.insert(p.canonical.clone());
        }
    }
    let width = drafts.len().to_string().len().max(6);
    let mut messages = Vec::with_capacity(drafts.len());
    for (n, (si, d)) in drafts.into_iter().enumerate() {
        let id = format!("m{n:0width$}");
        if d.human_style && plans[si].category != Category::Human {
            truth.message_overrides.insert(id.clone(), Category::Human);
        }
        debug_assert_eq!(canonical_address(&d.sender).unwrap(), d.canonical);
        messages.push(Message::new(id, &d.sender, d.to, d.ts, d.subject, d.body, d.actions, d.folder)?);
    }
    Ok(SyntheticCorpus { messages, truth })
}

fn geometric<R: Rng>(rng: &mut R, p: f64) -> usize {
    let mut n = 0;
    while !rng.random_bool(p) {
        n += 1;
    }
    n
}

/// Splits `total` into `n` positive parts with lognormal-ish weights.
fn allocate<R: Rng>(rng: &mut R, total: usize, n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut counts = vec![1usize; n];
    let rest = total.saturating_sub(n);
    if rest == 0 {
        return counts;
    }
    let weights: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rand_distr::StandardNormal.sample(rng);
            (0.6 * z).exp()
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    let mut assigned = 0;
    let mut fracs: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, w) in weights.iter().enumerate() {
        let exact = rest as f64 * w / sum;
        let whole = exact.floor() as usize;
        counts[i] += whole;
        assigned += whole;
        fracs.push((exact - whole as f64, i));
    }
    fracs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in fracs.into_iter().take(rest - assigned) {
        counts[i] += 1;
    }
    counts
}

fn recipient_actions<R: Rng>(
    rng: &mut R,
    b: &Behavior,
    cat: Category,
    folder_user_share: f64,
    human: bool,
) -> (Actions, Option<String>) {
    let mut a = Actions::empty();
    if rng.random_bool(b.read) {
        a.insert(Actions::READ);
    }
    if rng.random_bool(b.replied) {
        a.insert(Actions::REPLIED);
    }
    if rng.random_bool(b.forwarded) {
        a.insert(Actions::FORWARDED);
    }
    let deleted = rng.random_bool(b.deleted);
    if deleted {
        a.insert(Actions::DELETED);
    }
    let spam = rng.random_bool(b.spam);
    if spam {
        a.insert(Actions::SPAM_VOTE);
    }
    let mut folder = None;
    if !deleted && rng.random_bool((folder_user_share * b.folder_affinity).clamp(0.0, 1.0)) {
        let name = if human {
            let pool = folder_pool(Category::Human);
            pool[rng.random_range(0..pool.len())]
        } else if rng.random_bool(0.8) {
            let pool = folder_pool(cat);
            // Labeled names sit at the front of each pool and are chosen more often.
            let idx = (rng.random::<f64>().powi(2) * pool.len() as f64) as usize;
            pool[idx.min(pool.len() - 1)]
        } else {
            NOISE_FOLDERS[rng.random_range(0..NOISE_FOLDERS.len())]
        };
        folder = Some(name.to_string());
    } else if !human && rng.random_bool(0.01) {
        folder = Some(THIRD_PARTY[rng.random_range(0..THIRD_PARTY.len())].to_string());
    } else if deleted && rng.random_bool(0.2) {
        folder = Some("trash".to_string());
    } else if spam && rng.random_bool(0.5) {
        folder = Some("spam".to_string());
    }
    (a, folder)
}

/// Emulates the editor-labeled set: a seeded sample of senders with their true category.
pub fn sample_manual_labels(truth: &GroundTruth, share: f64, seed: u64) -> BTreeMap<String, Category> {
    let mut rng = ChaCha8Rng::seed_from_u64(sender_seed(seed, 0, 4));
    truth
        .senders
        .iter()
        .filter(|_| rng.random_bool(share.clamp(0.0, 1.0)))
        .map(|(s, c)| (s.clone(), *c))
        .collect()
}

/// Message counts per true sender category.
pub fn category_volumes(messages: &[Message], truth: &GroundTruth) -> HashMap<Category, usize> {
    let mut out = HashMap::new();
    for m in messages {
        if let Ok(c) = canonical_address(&m.sender) {
            if let Some(cat) = truth.sender_category(&c) {
                *out.entry(cat).or_default() += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::message::corpus_to_string;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig::with_total_senders(600, seed)
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate_synthetic_corpus(&small(3)).unwrap();
        let b = generate_synthetic_corpus(&small(3)).unwrap();
        assert_eq!(corpus_to_string(&a.messages), corpus_to_string(&b.messages));
        assert_eq!(a.truth, b.truth);
        let c = generate_synthetic_corpus(&small(4)).unwrap();
        assert_ne!(corpus_to_string(&a.messages), corpus_to_string(&c.messages));
    }

    #[test]
    fn zero_senders_rejected() {
        let mut cfg = small(1);
        cfg.senders.insert(Category::Travel, 0);
        assert!(generate_synthetic_corpus(&cfg).is_err());
    }

    #[test]
    fn human_share_is_honored() {
        let mut cfg = small(5);
        cfg.human_share = 0.1;
        let corpus = generate_synthetic_corpus(&cfg).unwrap();
        let vols = category_volumes(&corpus.messages, &corpus.truth);
        let total: usize = vols.values().sum();
        let human = vols.get(&Category::Human).copied().unwrap_or(0) as f64 / total as f64;
        assert!((human - 0.1).abs() <= 0.02, "human share {human}");
        assert!((1.0 - human - 0.9).abs() <= 0.02);
    }

    #[test]
    fn every_sender_has_one_category_and_messages_match() {
        let corpus = generate_synthetic_corpus(&small(9)).unwrap();
        let n_total: usize = small(9).senders.values().sum();
        assert_eq!(corpus.truth.senders.len(), n_total);
        for m in &corpus.messages {
            let c = canonical_address(&m.sender).unwrap();
            let sender_cat = corpus.truth.sender_category(&c).expect("known sender");
            let msg_cat = corpus.truth.message_category(m).unwrap();
            if msg_cat != sender_cat {
                assert!(corpus.truth.mixed_senders.contains(&c));
                assert_eq!(msg_cat, Category::Human);
            }
        }
    }

    #[test]
    fn mixed_sender_rate_matches_config() {
        let cfg = SynthConfig::with_total_senders(2000, 11);
        let corpus = generate_synthetic_corpus(&cfg).unwrap();
        let machine = corpus.truth.senders.values().filter(|c| c.is_machine()).count();
        let rate = corpus.truth.mixed_senders.len() as f64 / machine as f64;
        assert!((rate - cfg.mixed_sender_share).abs() <= 0.01, "{rate}");
    }
}
