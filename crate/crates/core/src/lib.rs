//! Goal recognition from path signatures.
//!
//! Trajectories towards each candidate goal are encoded as truncated path
//! signatures and stored in a prefix tree. Observations of an agent are
//! encoded the same way, online, and compared against every branch of the
//! tree to produce a posterior over goals.

/// Fieldless enum with a fixed lowercase name per variant.
macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl std::str::FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} '{}', expected one of: {}",
                        stringify!($name),
                        other,
                        [$($text),+].join(", ")
                    )),
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }
    };
}

pub mod bench;
pub mod dtw;
pub mod recognizer;
pub mod sampler;
pub mod signature;
pub mod trajtree;
