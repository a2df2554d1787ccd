//! Bundled example programs; each models one way reflective inputs go
//! missing in app code.

pub struct Fixture {
    pub name: &'static str,
    pub source: &'static str,
    pub entry: &'static str,
    /// Taint configuration shipped with the fixture, if any.
    pub taint: Option<&'static str>,
}

pub const CONTAINERS: Fixture = Fixture { name: "containers", source: include_str!("../fixtures/containers.ir"), entry: "Main.main", taint: None };
pub const ACTIVITIES: Fixture = Fixture { name: "activities", source: include_str!("../fixtures/activities.ir"), entry: "Main.main", taint: None };
pub const LOGGER: Fixture = Fixture {
    name: "logger",
    source: include_str!("../fixtures/logger.ir"),
    entry: "Main.main",
    taint: Some(include_str!("../fixtures/log.taint")),
};
pub const MEDIA: Fixture = Fixture {
    name: "media",
    source: include_str!("../fixtures/media.ir"),
    entry: "Main.main",
    taint: Some(include_str!("../fixtures/media.taint")),
};
pub const TELEPHONY: Fixture = Fixture { name: "telephony", source: include_str!("../fixtures/telephony.ir"), entry: "Main.main", taint: None };
pub const TELEPHONY_UNMODELED: Fixture = Fixture {
    name: "telephony_unmodeled",
    source: include_str!("../fixtures/telephony_unmodeled.ir"),
    entry: "Main.main",
    taint: None,
};
pub const RECEIVERS: Fixture = Fixture { name: "receivers", source: include_str!("../fixtures/receivers.ir"), entry: "Main.main", taint: None };

pub const ALL: [Fixture; 7] = [CONTAINERS, ACTIVITIES, LOGGER, MEDIA, TELEPHONY, TELEPHONY_UNMODELED, RECEIVERS];

pub fn by_name(name: &str) -> Option<&'static Fixture> {
    ALL.iter().find(|f| f.name == name)
}
