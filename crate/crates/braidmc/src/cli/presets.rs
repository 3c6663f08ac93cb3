//! Shipped operating-point presets, embedded at compile time.

pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "cb_L4",
        text: include_str!("../../presets/cb_L4.toml"),
    },
    Preset {
        name: "cb_L6",
        text: include_str!("../../presets/cb_L6.toml"),
    },
    Preset {
        name: "cb_L10",
        text: include_str!("../../presets/cb_L10.toml"),
    },
    Preset {
        name: "str_L12",
        text: include_str!("../../presets/str_L12.toml"),
    },
    Preset {
        name: "z2_half_L4",
        text: include_str!("../../presets/z2_half_L4.toml"),
    },
    Preset {
        name: "z2_half_L6",
        text: include_str!("../../presets/z2_half_L6.toml"),
    },
    Preset {
        name: "z2_third_L6",
        text: include_str!("../../presets/z2_third_L6.toml"),
    },
    Preset {
        name: "vbs_L6",
        text: include_str!("../../presets/vbs_L6.toml"),
    },
    Preset {
        name: "sf_kagome_L6",
        text: include_str!("../../presets/sf_kagome_L6.toml"),
    },
    Preset {
        name: "ring3_oracle",
        text: include_str!("../../presets/ring3_oracle.toml"),
    },
    Preset {
        name: "rect_2x4_oracle",
        text: include_str!("../../presets/rect_2x4_oracle.toml"),
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// First comment line of the preset, as its one-line description.
pub fn summary(p: &Preset) -> &str {
    p.text
        .lines()
        .next()
        .unwrap_or("")
        .trim_start_matches('#')
        .trim()
}
