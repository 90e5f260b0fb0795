//! Seeded generator of multi-layout tenancy schedules with known ground truth.
//!
//! Each built-in layout reproduces a real schedule's header row verbatim,
//! including duplicated and unnamed columns, and renders values with that
//! layout's number and date conventions.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Months, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fd::ClusterTruth;
use crate::ingest::{load_table, Document, Manifest, ManifestEntry};
use crate::optimizer::GroundTruth;
use crate::schema::bundled_schema;

/// Mean office rent per square metre per year.
pub const MEAN_RATE: f64 = 250.0;

/// Typed record fields a column can render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    PropertyId,
    PropertyName,
    Address,
    Tenant,
    Use,
    OfficeArea,
    ArchiveArea,
    StorageArea,
    TotalArea,
    Parking,
    OfficeRent,
    PassingRent,
    Commencement,
    Expiry,
    Break,
    NextIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumberStyle {
    /// `620`
    Plain,
    /// `5.294`
    DotGrouped,
    /// `82,284`
    CommaGrouped,
    /// `€ 1,177,924`
    EuroComma,
    /// `€ 23.000`
    EuroDot,
    /// `156178,19`
    DecimalComma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateStyle {
    /// `6-3-2013`
    DMY,
    /// `01-01-08`
    DdMmYy,
    /// `1-jan-2016`
    DMonY,
    /// `01-01-2012`
    DdMmYyyy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloorStyle {
    /// `GF` for ground, else the number
    GroundFloor,
    /// `4th`
    Ordinal,
    /// a number, sometimes `2 and 3`
    Spanning,
    Number,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VatStyle {
    YesNo,
    YN,
}

/// Filler columns that map to no target attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    /// Always a missing marker or blank.
    Blank(&'static str),
    Constant(&'static str),
    /// Occasionally a restaurant area, else `-`.
    RestaurantArea,
    RestaurantRent,
    OfficePlusRestaurantRent,
    ArchiveRent,
    ArchiveRate,
    MonthlyRate,
    ParkingRent,
    ParkingUnitRent,
    RatePlain,
    ArchiveRatePlain,
    ParkingRateComma,
    MonthlyRateComma,
    OptionsStar,
    OptionsNx,
    OptionsCbre,
    NoticeMonthsText,
    NoticeMonths,
    NoticeGiven,
    TermToExpiry,
    TermToBreak,
    Guarantee,
    Comments,
    UnitNumber,
    PaymentPeriod,
    SecurityType,
    SecurityAmount,
    EdifId,
    DemiseId,
    TenantId,
    EarliestExpiry,
    TotalInclService,
    TotalInclVat,
    RowNumber,
    Brand,
    SecondarySize,
    DepositAmount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Render {
    Text(Field),
    Number(Field, NumberStyle),
    Date(Field, DateStyle),
    Floor(FloorStyle),
    Vat(VatStyle),
    Noise(Noise),
}

/// What a column means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Attribute(&'static str),
    /// No target attribute; the optional group labels columns that are
    /// equivalent across layouts.
    Noise(Option<&'static str>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSpec {
    pub header: &'static str,
    pub role: Role,
    pub render: Render,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutSpec {
    pub format_id: &'static str,
    /// Standard deviation of the per-sqm rent rate.
    pub rate_sigma: f64,
    pub columns: Vec<ColumnSpec>,
}

const fn col(header: &'static str, role: Role, render: Render) -> ColumnSpec {
    ColumnSpec { header, role, render }
}

const fn attr(name: &'static str) -> Role {
    Role::Attribute(name)
}

const NOISE: Role = Role::Noise(None);
const COMMENTS: Role = Role::Noise(Some("comments"));
const NOTICE: Role = Role::Noise(Some("notice_period"));
const OPTIONS: Role = Role::Noise(Some("options"));
const TERM: Role = Role::Noise(Some("lease_term"));

pub fn jll() -> LayoutSpec {
    use Field::*;
    use NumberStyle::*;
    use Render::*;
    LayoutSpec {
        format_id: "JLL",
        rate_sigma: 40.0,
        columns: vec![
            col("Tenant", attr("tenant_name"), Text(Tenant)),
            col("Floor", attr("floor"), Floor(FloorStyle::GroundFloor)),
            col("Total", attr("total_area"), Number(TotalArea, DotGrouped)),
            col("Office/Business space", attr("office_area"), Number(OfficeArea, DotGrouped)),
            col("Archive", attr("archive_area"), Number(ArchiveArea, Plain)),
            col("Restaurant", NOISE, Noise(self::Noise::RestaurantArea)),
            col("pp", attr("parking_spaces"), Number(Parking, Plain)),
            col("Total.1", attr("passing_rent_pa"), Number(PassingRent, EuroComma)),
            col("Office+Restaurant", NOISE, Noise(self::Noise::OfficePlusRestaurantRent)),
            col("Office", attr("office_rent"), Number(OfficeRent, EuroComma)),
            col("Archive", NOISE, Noise(self::Noise::ArchiveRent)),
            col("unnamed.1", NOISE, Noise(self::Noise::ArchiveRate)),
            col("Restaurant*", NOISE, Noise(self::Noise::RestaurantRent)),
            col("unnamed.2", NOISE, Noise(self::Noise::MonthlyRate)),
            col("Parking", NOISE, Noise(self::Noise::ParkingRent)),
            col("unnamed.3", NOISE, Noise(self::Noise::ParkingUnitRent)),
            col("Commencement", attr("commencement_date"), Date(Commencement, DateStyle::DMY)),
            col("Expiry", attr("expiry_date"), Date(Expiry, DateStyle::DMY)),
            col("Break", attr("break_date"), Date(Break, DateStyle::DMY)),
            col("Tenant option(s)", OPTIONS, Noise(self::Noise::OptionsStar)),
            col("Notice Period", NOTICE, Noise(self::Noise::NoticeMonthsText)),
            col("Notice given", NOISE, Noise(self::Noise::NoticeGiven)),
            col("WAULT", TERM, Noise(self::Noise::TermToExpiry)),
            col("WAULB", NOISE, Noise(self::Noise::TermToBreak)),
            col("first index", attr("next_index_date"), Date(NextIndex, DateStyle::DMY)),
            col("Yes/No", attr("vat_liable"), Vat(VatStyle::YesNo)),
            col("% comp", NOISE, Noise(self::Noise::Blank("-"))),
            col("Guarantee", NOISE, Noise(self::Noise::Guarantee)),
            col("Comments", COMMENTS, Noise(self::Noise::Comments)),
        ],
    }
}

pub fn savills() -> LayoutSpec {
    use Field::*;
    use NumberStyle::*;
    use Render::*;
    LayoutSpec {
        format_id: "Savills",
        rate_sigma: 42.5,
        columns: vec![
            col("Property code", attr("property_id"), Text(PropertyId)),
            col("Property / Address", attr("address"), Text(Address)),
            col("Floor", attr("floor"), Floor(FloorStyle::Spanning)),
            col("Unit number Savills", NOISE, Noise(self::Noise::UnitNumber)),
            col("Tenant", attr("tenant_name"), Text(Tenant)),
            col("Leased space", attr("use_type"), Text(Use)),
            col("Office space sq m", attr("office_area"), Number(OfficeArea, Plain)),
            col("Storage space sq m", attr("archive_area"), Number(StorageArea, Plain)),
            col("Total Area sq m", attr("total_area"), Number(TotalArea, Plain)),
            col("Total rent office space/y", attr("office_rent"), Number(OfficeRent, DecimalComma)),
            col("Total annual rent", attr("passing_rent_pa"), Number(PassingRent, DecimalComma)),
            col("Payment period (m/q)", NOISE, Noise(self::Noise::PaymentPeriod)),
            col("VAT liable (y/n)", attr("vat_liable"), Vat(VatStyle::YN)),
            col("VAT comp (€)", NOISE, Noise(self::Noise::Blank(""))),
            col("Start date lease", attr("commencement_date"), Date(Commencement, DateStyle::DMY)),
            col("Notice period", NOTICE, Noise(self::Noise::NoticeMonths)),
            col("Break option date", attr("break_date"), Date(Break, DateStyle::DMY)),
            col("Notice period Break option", NOISE, Noise(self::Noise::Blank(""))),
            col("Expiry date", attr("expiry_date"), Date(Expiry, DateStyle::DMY)),
            col("Next index date", attr("next_index_date"), Date(NextIndex, DateStyle::DMY)),
            col("Option period", OPTIONS, Noise(self::Noise::OptionsNx)),
            col("Type of Security", NOISE, Noise(self::Noise::SecurityType)),
            col("Security Amount", NOISE, Noise(self::Noise::SecurityAmount)),
            col(
                "CPI Indices (2000=100, 2006=100, 2015=100)",
                NOISE,
                Noise(self::Noise::Constant("2015=100")),
            ),
            col("Comments", COMMENTS, Noise(self::Noise::Blank(""))),
        ],
    }
}

pub fn cbre() -> LayoutSpec {
    use Field::*;
    use NumberStyle::*;
    use Render::*;
    LayoutSpec {
        format_id: "CBRE",
        rate_sigma: 45.0,
        columns: vec![
            col("Tenant", attr("tenant_name"), Text(Tenant)),
            col("Floor(s)", attr("floor"), Floor(FloorStyle::Ordinal)),
            col("Office (sq m)", attr("office_area"), Number(OfficeArea, Plain)),
            col("Archive (sq m)", attr("archive_area"), Number(ArchiveArea, Plain)),
            col("PP", attr("parking_spaces"), Number(Parking, Plain)),
            col("Rent office (€/sqm)", NOISE, Noise(self::Noise::RatePlain)),
            col("Rent Archive (€/sqm)", NOISE, Noise(self::Noise::ArchiveRatePlain)),
            col("Rent PP (€/PP)", NOISE, Noise(self::Noise::ParkingRateComma)),
            col("Annual rent (excl. VAT)", attr("office_rent"), Number(OfficeRent, CommaGrouped)),
            col("VAT compensation", NOISE, Noise(self::Noise::Blank(""))),
            col(
                "Total annual rent (excl. VAT)",
                attr("passing_rent_pa"),
                Number(PassingRent, CommaGrouped),
            ),
            col("VAT", attr("vat_liable"), Vat(VatStyle::YN)),
            col("Start date", attr("commencement_date"), Date(Commencement, DateStyle::DdMmYy)),
            col("Next index", attr("next_index_date"), Date(NextIndex, DateStyle::DdMmYy)),
            col("Termination date", attr("expiry_date"), Date(Expiry, DateStyle::DdMmYy)),
            col("Remaining lease term", TERM, Noise(self::Noise::TermToExpiry)),
            col("Notice period", NOTICE, Noise(self::Noise::NoticeMonthsText)),
            col("Options/Extensions", OPTIONS, Noise(self::Noise::OptionsCbre)),
        ],
    }
}

pub fn edif() -> LayoutSpec {
    use Field::*;
    use NumberStyle::*;
    use Render::*;
    LayoutSpec {
        format_id: "EDIF",
        rate_sigma: 47.5,
        columns: vec![
            col("EDIF ID", NOISE, Noise(self::Noise::EdifId)),
            col("Property ID No.", attr("property_id"), Text(PropertyId)),
            col("Property Name", attr("property_name"), Text(PropertyName)),
            col("Country", NOISE, Noise(self::Noise::Constant("Netherlands"))),
            col("Demise ID No.", NOISE, Noise(self::Noise::DemiseId)),
            col("Floor", attr("floor"), Floor(FloorStyle::Number)),
            col("Tenant ID No.", NOISE, Noise(self::Noise::TenantId)),
            col("Tenant Name", attr("tenant_name"), Text(Tenant)),
            col("Use", attr("use_type"), Text(Use)),
            col("NLA (Sqm)", attr("total_area"), Number(TotalArea, DotGrouped)),
            col("Parking Spaces", attr("parking_spaces"), Number(Parking, Plain)),
            col("Lease Start Date", attr("commencement_date"), Date(Commencement, DateStyle::DMonY)),
            col("Break Date", attr("break_date"), Date(Break, DateStyle::DMonY)),
            col("Expiry Date", attr("expiry_date"), Date(Expiry, DateStyle::DMonY)),
            col("Earliest Expiry Date", NOISE, Noise(self::Noise::EarliestExpiry)),
            col(
                "Contracted Rent at Reporting Date (€ psqm pm)",
                NOISE,
                Noise(self::Noise::MonthlyRateComma),
            ),
            col(
                "Contracted Rent at Reporting Date (€ per unit pm)",
                NOISE,
                Noise(self::Noise::Blank("")),
            ),
            col(
                "Contracted Annual Rent (€ pa)",
                attr("passing_rent_pa"),
                Number(PassingRent, DotGrouped),
            ),
            col("TOTAL", NOISE, Noise(self::Noise::TotalInclService)),
            col("14,50%", NOISE, Noise(self::Noise::TotalInclVat)),
        ],
    }
}

pub fn park15() -> LayoutSpec {
    use Field::*;
    use NumberStyle::*;
    use Render::*;
    LayoutSpec {
        format_id: "PARK15",
        rate_sigma: 50.0,
        columns: vec![
            col("ID", NOISE, Noise(self::Noise::RowNumber)),
            col("Address", attr("address"), Text(Address)),
            col("Tenant", attr("tenant_name"), Text(Tenant)),
            col("Brand", NOISE, Noise(self::Noise::Brand)),
            col("Contractual size (sqm)", attr("total_area"), Number(TotalArea, Plain)),
            col("LFA/GFA", NOISE, Noise(self::Noise::Blank("-"))),
            col("Total size (sqm LFA NEN2580)", NOISE, Noise(self::Noise::SecondarySize)),
            col("Start date", attr("commencement_date"), Date(Commencement, DateStyle::DdMmYyyy)),
            col("Expiry date", attr("expiry_date"), Date(Expiry, DateStyle::DdMmYyyy)),
            col("Break date", attr("break_date"), Date(Break, DateStyle::DdMmYyyy)),
            col("WALL (to break)", NOISE, Noise(self::Noise::TermToBreak)),
            col("WALL (to expiry)", TERM, Noise(self::Noise::TermToExpiry)),
            col("Option periods", OPTIONS, Noise(self::Noise::OptionsStar)),
            col("Extension periods", NOISE, Noise(self::Noise::OptionsNx)),
            col("Notice periods (months)", NOTICE, Noise(self::Noise::NoticeMonths)),
            col("Total gross annual rent", attr("passing_rent_pa"), Number(PassingRent, EuroComma)),
            col("Next index date", attr("next_index_date"), Date(NextIndex, DateStyle::DdMmYyyy)),
            col("VAT liable", attr("vat_liable"), Vat(VatStyle::YesNo)),
            col("Type", NOISE, Noise(self::Noise::SecurityType)),
            col("Amount", NOISE, Noise(self::Noise::DepositAmount)),
            col("Terminated lease", NOISE, Noise(self::Noise::Constant("No"))),
            col("Comments", COMMENTS, Noise(self::Noise::Blank("-"))),
        ],
    }
}

/// The five built-in layouts in a fixed order.
pub fn builtin_layouts() -> Vec<LayoutSpec> {
    vec![jll(), savills(), cbre(), edif(), park15()]
}

/// One lease, before rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaseRecord {
    pub tenant: String,
    pub floor: i32,
    pub use_type: String,
    pub office_area: f64,
    pub archive_area: f64,
    pub storage_area: f64,
    pub total_area: f64,
    pub parking: f64,
    /// Office rent per sqm per year.
    pub rate: f64,
    pub office_rent: f64,
    pub archive_rent: f64,
    pub parking_rent: f64,
    pub passing_rent: f64,
    pub commencement: NaiveDate,
    pub expiry: NaiveDate,
    pub break_date: Option<NaiveDate>,
    pub next_index: NaiveDate,
    pub vat_liable: bool,
}

/// Per-document constants.
#[derive(Debug, Clone, PartialEq)]
struct Property {
    id: String,
    name: String,
    address: String,
}

/// The value a rendered cell should parse back to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TypedValue {
    /// Value and the parse tolerance (0 for integers).
    Number(f64, f64),
    Date(NaiveDate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedCell {
    pub row: usize,
    pub column: usize,
    pub value: TypedValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDocument {
    pub id: String,
    pub format_id: String,
    pub csv: String,
    pub records: Vec<LeaseRecord>,
    pub typed_cells: Vec<TypedCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub documents: Vec<GeneratedDocument>,
    pub ground_truth: GroundTruth,
    pub cluster_truth: ClusterTruth,
    pub formats: Vec<String>,
}

impl Dataset {
    /// Ingest every generated CSV.
    pub fn load_documents(&self) -> Result<Vec<Document>> {
        self.documents
            .iter()
            .map(|d| {
                Ok(Document {
                    id: d.id.clone(),
                    table: load_table(&d.csv, &d.format_id)?,
                })
            })
            .collect()
    }

    /// Write `docs/<id>.csv`, `manifest.yaml`, `truth.csv` and `clusters.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let docs = dir.join("docs");
        std::fs::create_dir_all(&docs).map_err(|e| Error::io(&docs, e))?;
        let write = |path: &Path, body: &str| std::fs::write(path, body).map_err(|e| Error::io(path, e));
        let mut manifest = Manifest { documents: Vec::new() };
        for d in &self.documents {
            let rel = Path::new("docs").join(format!("{}.csv", d.id));
            write(&dir.join(&rel), &d.csv)?;
            manifest.documents.push(ManifestEntry {
                path: rel,
                format_id: d.format_id.clone(),
                id: Some(d.id.clone()),
            });
        }
        write(&dir.join("manifest.yaml"), &serde_yaml::to_string(&manifest)?)?;
        write(&dir.join("truth.csv"), &self.ground_truth.to_csv())?;
        write(&dir.join("clusters.csv"), &self.cluster_truth.to_csv(&self.formats))?;
        Ok(())
    }
}

const TENANT_BASES: &[&str] = &[
    "NeuroLogic",
    "Stonebridge Partners",
    "Nuvion Consulting",
    "Enovix Utilities",
    "Northwind Trading",
    "Blue Harbor Logistics",
    "Vermeer Legal",
    "Atlas Engineering",
    "Keystone Media",
    "Polder Analytics",
    "Helix Pharma",
    "Canal Capital",
    "Orion Software",
    "Tulip Insurance",
    "Meridian Health",
    "Dune Architects",
];
const SUFFIXES: &[&str] = &["B.V.", "N.V.", "GmbH", "Ltd."];
const CITIES: &[&str] = &[
    "Amsterdam",
    "Apeldoorn",
    "Utrecht",
    "Rotterdam",
    "Eindhoven",
    "Den Haag",
    "Zwolle",
    "Arnhem",
];
const STREETS: &[&str] = &[
    "Prinsengracht",
    "Parkweg",
    "Herengracht",
    "Stationsplein",
    "Westblaak",
    "Catharijnesingel",
    "Strawinskylaan",
];
const USES: &[&str] = &["Office", "Office", "Office", "Archive", "Retail"];
const COMMENTS_POOL: &[&str] = &[
    "-",
    "",
    "Rent free period 3 months",
    "Indexed annually",
    "1-5",
    "Subject to renewal",
];
const MONTHS: [&str; 12] = [
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
];

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Integer with a thousands separator.
pub fn group_int(n: i64, sep: char) -> String {
    let digits = n.unsigned_abs().to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(sep);
        }
        out.push(ch);
    }
    if n < 0 {
        out.insert(0, '-');
    }
    out
}

/// Render a number in `style`, returning the text and the value it encodes.
pub fn format_number(x: f64, style: NumberStyle) -> (String, TypedValue) {
    match style {
        NumberStyle::DecimalComma => {
            let v = round2(x);
            (format!("{v:.2}").replace('.', ","), TypedValue::Number(v, 0.005))
        }
        _ => {
            let n = x.round() as i64;
            let text = match style {
                NumberStyle::Plain => n.to_string(),
                NumberStyle::DotGrouped => group_int(n, '.'),
                NumberStyle::CommaGrouped => group_int(n, ','),
                NumberStyle::EuroComma => format!("€ {}", group_int(n, ',')),
                NumberStyle::EuroDot => format!("€ {}", group_int(n, '.')),
                NumberStyle::DecimalComma => unreachable!(),
            };
            (text, TypedValue::Number(n as f64, 0.0))
        }
    }
}

pub fn format_date(d: NaiveDate, style: DateStyle) -> String {
    match style {
        DateStyle::DMY => format!("{}-{}-{}", d.day(), d.month(), d.year()),
        DateStyle::DdMmYy => format!("{:02}-{:02}-{:02}", d.day(), d.month(), d.year() % 100),
        DateStyle::DMonY => format!("{}-{}-{}", d.day(), MONTHS[d.month0() as usize], d.year()),
        DateStyle::DdMmYyyy => d.format("%d-%m-%Y").to_string(),
    }
}

fn ordinal(n: i32) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn random_date(rng: &mut ChaCha8Rng, from: NaiveDate, to: NaiveDate) -> NaiveDate {
    let span = (to - from).num_days();
    from + chrono::Duration::days(rng.gen_range(0..=span))
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

fn years_between(from: NaiveDate, to: NaiveDate) -> f64 {
    ((to - from).num_days() as f64 / 365.25).max(0.0)
}

/// Reference date for remaining-term columns.
fn reporting_date() -> NaiveDate {
    ymd(2024, 1, 1)
}

fn draw_record(rng: &mut ChaCha8Rng, rate: &Normal<f64>) -> LeaseRecord {
    let base = TENANT_BASES.choose(rng).expect("non-empty pool");
    let suffix = SUFFIXES.choose(rng).expect("non-empty pool");
    let tenant = if rng.gen_bool(0.3) {
        format!("{base} {} {suffix}", rng.gen_range(1..100))
    } else {
        format!("{base} {suffix}")
    };
    let office_area = rng.gen_range(200.0f64..=5000.0).round();
    let archive_area = rng.gen_range(10.0f64..=200.0).round();
    let storage_area = rng.gen_range(10.0f64..=500.0).round();
    let parking = rng.gen_range(0..=60) as f64;
    let r = rate.sample(rng).max(50.0);
    let office_rent = round2(office_area * r);
    let archive_rent = round2(archive_area * r * 0.4);
    let parking_rent = round2(parking * rng.gen_range(1500.0..2500.0));
    let commencement = random_date(rng, ymd(2000, 1, 1), ymd(2022, 12, 31));
    let term_years = rng.gen_range(5..=15);
    let expiry = commencement
        .checked_add_months(Months::new(12 * term_years))
        .expect("in range")
        .pred_opt()
        .expect("in range");
    let break_date = (term_years >= 8)
        .then(|| commencement.checked_add_months(Months::new(60)).expect("in range"));
    let next_index = ymd(rng.gen_range(2024..=2025), commencement.month(), 1);
    LeaseRecord {
        tenant,
        floor: rng.gen_range(-1..=8),
        use_type: USES.choose(rng).expect("non-empty pool").to_string(),
        office_area,
        archive_area,
        storage_area,
        total_area: office_area + archive_area,
        parking,
        rate: r,
        office_rent,
        archive_rent,
        parking_rent,
        passing_rent: round2(office_rent + archive_rent + parking_rent),
        commencement,
        expiry,
        break_date,
        next_index,
        vat_liable: rng.gen_bool(0.8),
    }
}

struct RowContext<'a> {
    record: &'a LeaseRecord,
    property: &'a Property,
    row: usize,
}

fn render_cell(render: Render, ctx: &RowContext, rng: &mut ChaCha8Rng) -> (String, Option<TypedValue>) {
    let r = ctx.record;
    let text = |s: &str| (s.to_string(), None);
    match render {
        Render::Text(field) => match field {
            Field::PropertyId => text(&ctx.property.id),
            Field::PropertyName => text(&ctx.property.name),
            Field::Address => text(&ctx.property.address),
            Field::Tenant => text(&r.tenant),
            Field::Use => text(&r.use_type),
            _ => unreachable!("numeric field rendered as text"),
        },
        Render::Number(field, style) => {
            let value = match field {
                Field::OfficeArea => r.office_area,
                Field::ArchiveArea => r.archive_area,
                Field::StorageArea => r.storage_area,
                Field::TotalArea => r.total_area,
                Field::Parking => r.parking,
                Field::OfficeRent => r.office_rent,
                Field::PassingRent => r.passing_rent,
                _ => unreachable!("non-numeric field rendered as number"),
            };
            let (s, v) = format_number(value, style);
            (s, Some(v))
        }
        Render::Date(field, style) => {
            let date = match field {
                Field::Commencement => Some(r.commencement),
                Field::Expiry => Some(r.expiry),
                Field::Break => r.break_date,
                Field::NextIndex => Some(r.next_index),
                _ => unreachable!("non-date field rendered as date"),
            };
            match date {
                Some(d) => (format_date(d, style), Some(TypedValue::Date(d))),
                None => text("-"),
            }
        }
        Render::Floor(style) => {
            let f = r.floor;
            let typed = Some(TypedValue::Number(f as f64, 0.0));
            match style {
                FloorStyle::GroundFloor if f == 0 => text("GF"),
                FloorStyle::Ordinal if f == 0 => text("GF"),
                FloorStyle::Ordinal if f < 0 => text("B1"),
                FloorStyle::Ordinal => text(&ordinal(f)),
                FloorStyle::Spanning if f >= 0 && rng.gen_bool(0.2) => text(&format!("{f} and {}", f + 1)),
                _ => (f.to_string(), typed),
            }
        }
        Render::Vat(style) => {
            let s = match (style, r.vat_liable) {
                (VatStyle::YesNo, true) => "Yes",
                (VatStyle::YesNo, false) => "No",
                (VatStyle::YN, true) => "Y",
                (VatStyle::YN, false) => "N",
            };
            text(s)
        }
        Render::Noise(kind) => (render_noise(kind, ctx, rng), None),
    }
}

fn render_noise(kind: Noise, ctx: &RowContext, rng: &mut ChaCha8Rng) -> String {
    let r = ctx.record;
    let euro = |x: f64| format_number(x, NumberStyle::EuroComma).0;
    let restaurant = (rng.gen_bool(0.15)).then(|| rng.gen_range(50.0f64..300.0).round());
    match kind {
        Noise::Blank(s) | Noise::Constant(s) => s.to_string(),
        Noise::RestaurantArea => restaurant.map_or("-".into(), |a| a.to_string()),
        Noise::RestaurantRent => restaurant.map_or("-".into(), |a| euro(a * r.rate * 0.8)),
        Noise::OfficePlusRestaurantRent => euro(r.office_rent + restaurant.map_or(0.0, |a| a * r.rate * 0.8)),
        Noise::ArchiveRent => euro(r.archive_rent),
        Noise::ArchiveRate => euro(r.rate * 0.4 * 2.0),
        Noise::MonthlyRate => format!("€ {:.2}", r.rate / 12.0),
        Noise::ParkingRent if r.parking == 0.0 => "-".into(),
        Noise::ParkingRent => format_number(r.parking_rent, NumberStyle::EuroDot).0,
        Noise::ParkingUnitRent => euro(rng.gen_range(150.0..500.0)),
        Noise::RatePlain => format!("{:.0}", r.rate),
        Noise::ArchiveRatePlain => format!("{:.0}", r.rate * 0.4),
        Noise::ParkingRateComma => group_int(rng.gen_range(1500..2500), ','),
        Noise::MonthlyRateComma => format!("{:.2}", r.rate / 12.0).replace('.', ","),
        Noise::OptionsStar => format!("{}*5", [1, 2, 99].choose(rng).expect("non-empty")),
        Noise::OptionsNx => "nx5".into(),
        Noise::OptionsCbre => format!("{} * 5 years", ["N", "1", "2"].choose(rng).expect("non-empty")),
        Noise::NoticeMonthsText => format!("{} months", [3, 6, 12].choose(rng).expect("non-empty")),
        Noise::NoticeMonths => [3, 6, 12].choose(rng).expect("non-empty").to_string(),
        Noise::NoticeGiven => if rng.gen_bool(0.1) { "Yes" } else { "No" }.into(),
        Noise::TermToExpiry => format!("{:.1}", years_between(reporting_date(), r.expiry)),
        Noise::TermToBreak => {
            format!("{:.1}", years_between(reporting_date(), r.break_date.unwrap_or(r.expiry)))
        }
        Noise::Guarantee => if rng.gen_bool(0.8) { "n.a." } else { "Bank guarantee" }.into(),
        Noise::Comments => COMMENTS_POOL.choose(rng).expect("non-empty").to_string(),
        Noise::UnitNumber => format!("{:04}", 10 * (ctx.row + 1)),
        Noise::PaymentPeriod => if rng.gen_bool(0.7) { "Q" } else { "M" }.into(),
        Noise::SecurityType => ["Bank Guarantee", "Deposit", "-"].choose(rng).expect("non-empty").to_string(),
        Noise::SecurityAmount => format_number(round2(r.passing_rent / 4.0), NumberStyle::DecimalComma).0,
        Noise::EdifId => format!("{:04}", 100 + ctx.row),
        Noise::DemiseId => format!("D{:03}", ctx.row + 1),
        Noise::TenantId => format!("T{:04}", rng.gen_range(1..10000)),
        Noise::EarliestExpiry => format_date(r.break_date.unwrap_or(r.expiry), DateStyle::DMonY),
        Noise::TotalInclService => group_int((r.passing_rent * 1.03).round() as i64, '.'),
        Noise::TotalInclVat => group_int((r.passing_rent * 1.03 * 1.145).round() as i64, '.'),
        Noise::RowNumber => (ctx.row + 1).to_string(),
        Noise::Brand => r.tenant.split_whitespace().next().unwrap_or_default().to_string(),
        Noise::SecondarySize => format!("{:.0}", (r.total_area * rng.gen_range(0.2..0.4)).round()),
        Noise::DepositAmount => euro(round2(r.passing_rent / 4.0)),
    }
}

fn draw_property(rng: &mut ChaCha8Rng, format_id: &str, index: usize) -> Property {
    let city = CITIES.choose(rng).expect("non-empty");
    let street = STREETS.choose(rng).expect("non-empty");
    let number = rng.gen_range(1..200);
    let code: String = format_id.chars().take(3).collect::<String>().to_uppercase();
    Property {
        id: if format_id == "EDIF" {
            format!("P{:03}", index + 1)
        } else {
            format!("{code}{:03}", index + 1)
        },
        name: city.to_string(),
        address: if format_id == "PARK15" {
            format!("{street} {number}")
        } else {
            format!("{street} {number}-{} te {city}", number + 2)
        },
    }
}

/// Generate `docs_per_layout` documents of `rows_per_doc` leases for each
/// layout, with column ground truth and cross-layout column sets.
pub fn generate_dataset(
    layouts: &[LayoutSpec],
    docs_per_layout: usize,
    rows_per_doc: usize,
    seed: u64,
) -> Result<Dataset> {
    if rows_per_doc == 0 {
        return Err(Error::InvalidArgument("rows per document must be at least 1".into()));
    }
    if docs_per_layout == 0 {
        return Err(Error::InvalidArgument("documents per layout must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::new();
    let mut ground_truth = GroundTruth::default();
    // role label -> format -> loaded header
    let mut groups: BTreeMap<&str, BTreeMap<&str, String>> = BTreeMap::new();

    for layout in layouts {
        let rate = Normal::new(MEAN_RATE, layout.rate_sigma)
            .map_err(|e| Error::InvalidArgument(format!("rate distribution: {e}")))?;
        let raw_headers: Vec<&str> = layout.columns.iter().map(|c| c.header).collect();
        for k in 0..docs_per_layout {
            let property = draw_property(&mut rng, layout.format_id, k);
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(&raw_headers)?;
            let mut records = Vec::with_capacity(rows_per_doc);
            let mut typed_cells = Vec::new();
            for row in 0..rows_per_doc {
                let record = draw_record(&mut rng, &rate);
                let ctx = RowContext {
                    record: &record,
                    property: &property,
                    row,
                };
                let mut cells = Vec::with_capacity(layout.columns.len());
                for (column, spec) in layout.columns.iter().enumerate() {
                    let (text, typed) = render_cell(spec.render, &ctx, &mut rng);
                    if let Some(value) = typed {
                        typed_cells.push(TypedCell { row, column, value });
                    }
                    cells.push(text);
                }
                writer.write_record(&cells)?;
                records.push(record);
            }
            let csv = String::from_utf8(writer.into_inner().map_err(|e| Error::Table(e.to_string()))?)
                .expect("utf-8 output");
            let loaded = load_table(&csv, layout.format_id)?;
            for (spec, header) in layout.columns.iter().zip(&loaded.headers) {
                let label = match spec.role {
                    Role::Attribute(a) => {
                        ground_truth.insert(layout.format_id, header, a)?;
                        a
                    }
                    Role::Noise(Some(g)) => g,
                    Role::Noise(None) => continue,
                };
                groups
                    .entry(label)
                    .or_default()
                    .insert(layout.format_id, header.clone());
            }
            documents.push(GeneratedDocument {
                id: format!("{}_{:02}", layout.format_id.to_lowercase(), k + 1),
                format_id: layout.format_id.to_string(),
                csv,
                records,
                typed_cells,
            });
        }
    }

    let formats: Vec<String> = layouts.iter().map(|l| l.format_id.to_string()).collect();
    let schema = bundled_schema();
    let mut order: Vec<&str> = schema.names().collect();
    order.extend(["comments", "notice_period", "options", "lease_term"]);
    let sets = order
        .into_iter()
        .filter_map(|label| {
            let members = groups.get(label)?;
            (members.len() >= 2).then(|| {
                let members = formats
                    .iter()
                    .filter_map(|f| members.get(f.as_str()).map(|h| (f.clone(), h.clone())))
                    .collect();
                (label.to_string(), members)
            })
        })
        .collect();

    Ok(Dataset {
        documents,
        ground_truth,
        cluster_truth: ClusterTruth { sets },
        formats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_date, parse_numeric};

    #[test]
    fn header_counts() {
        let counts: Vec<usize> = builtin_layouts().iter().map(|l| l.columns.len()).collect();
        assert_eq!(counts, [29, 25, 18, 20, 22]);
    }

    #[test]
    fn roles_reference_schema() {
        let schema = bundled_schema();
        for layout in builtin_layouts() {
            let mut seen = std::collections::BTreeSet::new();
            for c in &layout.columns {
                if let Role::Attribute(a) = c.role {
                    assert!(schema.attribute(a).is_some(), "{a}");
                    assert!(seen.insert(a), "{} maps {a} twice", layout.format_id);
                }
            }
        }
    }

    #[test]
    fn formatter_examples() {
        assert_eq!(format_number(1177924.0, NumberStyle::EuroComma).0, "€ 1,177,924");
        assert_eq!(format_number(156178.19, NumberStyle::DecimalComma).0, "156178,19");
        assert_eq!(format_number(1409.0, NumberStyle::DotGrouped).0, "1.409");
        assert_eq!(format_number(23000.0, NumberStyle::EuroDot).0, "€ 23.000");
        assert_eq!(format_date(ymd(2013, 3, 6), DateStyle::DMY), "6-3-2013");
        assert_eq!(format_date(ymd(2008, 1, 1), DateStyle::DdMmYy), "01-01-08");
        assert_eq!(format_date(ymd(2016, 1, 1), DateStyle::DMonY), "1-jan-2016");
        assert_eq!(format_date(ymd(2012, 1, 1), DateStyle::DdMmYyyy), "01-01-2012");
        assert_eq!(ordinal(4), "4th");
        assert_eq!(ordinal(2), "2nd");
    }

    #[test]
    fn deterministic_and_consistent() {
        let a = generate_dataset(&builtin_layouts(), 2, 5, 42).unwrap();
        let b = generate_dataset(&builtin_layouts(), 2, 5, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_dataset(&builtin_layouts(), 2, 5, 43).unwrap());
        assert_eq!(a.cluster_truth.sets.len(), 20);
        for (_, members) in &a.cluster_truth.sets {
            assert!((2..=5).contains(&members.len()));
        }
        for r in a.documents.iter().flat_map(|d| &d.records) {
            assert!(r.commencement < r.expiry);
        }
        assert!(generate_dataset(&builtin_layouts(), 1, 0, 1).is_err());
    }

    #[test]
    fn typed_cells_round_trip() {
        let data = generate_dataset(&builtin_layouts(), 1, 20, 7).unwrap();
        let docs = data.load_documents().unwrap();
        for (g, d) in data.documents.iter().zip(&docs) {
            for cell in &g.typed_cells {
                let text = &d.table.cells[cell.row][cell.column];
                match cell.value {
                    TypedValue::Number(v, tol) => {
                        let got = parse_numeric(text).unwrap();
                        assert!((got - v).abs() <= tol, "{text}");
                    }
                    TypedValue::Date(v) => assert_eq!(parse_date(text), Some(v), "{text}"),
                }
            }
        }
    }
}
