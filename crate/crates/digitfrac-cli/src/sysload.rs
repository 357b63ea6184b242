//! System loading: built-in names and JSON files.

use digitfrac::counting::slab_system;
use digitfrac::DigitSystem;

/// Load a digit system from a built-in name or a JSON file path.
///
/// Built-ins: "cantor", "lebesgue:b:k", "slab:b:a:k".
pub fn load_system(spec: &str) -> Result<DigitSystem, String> {
    let spec = spec.trim();
    if spec == "cantor" {
        return Ok(DigitSystem::cantor());
    }
    if let Some(rest) = spec.strip_prefix("lebesgue:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err("expected lebesgue:b:k".into());
        }
        let b: u32 = parts[0].parse().map_err(|_| "bad base".to_string())?;
        let k: usize = parts[1].parse().map_err(|_| "bad dimension".to_string())?;
        return DigitSystem::lebesgue(b, k).map_err(|e| e.to_string());
    }
    if let Some(rest) = spec.strip_prefix("slab:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err("expected slab:b:a:k".into());
        }
        let b: u32 = parts[0].parse().map_err(|_| "bad base".to_string())?;
        let a: u32 = parts[1].parse().map_err(|_| "bad digit count".to_string())?;
        let k: usize = parts[2].parse().map_err(|_| "bad dimension".to_string())?;
        return slab_system(b, a, k).map_err(|e| e.to_string());
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| format!("cannot read system file '{spec}': {e}"))?;
    DigitSystem::from_json(&text)
}

/// FNV-1a over the canonical JSON; identifies the system in output metadata.
pub fn system_hash(sys: &DigitSystem) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in sys.to_json().bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins() {
        let c = load_system("cantor").unwrap();
        assert_eq!(c.base(), 3);
        assert_eq!(c.digit_count(), 2);
        let l = load_system("lebesgue:2:2").unwrap();
        assert_eq!(l.digit_count(), 4);
        let s = load_system("slab:10:5:2").unwrap();
        assert_eq!(s.digit_count(), 50);
        assert!(load_system("slab:10:5").is_err());
        assert!(load_system("nope").is_err());
    }

    #[test]
    fn json_file_round_trip() {
        let sys = load_system("slab:4:2:2").unwrap();
        let dir = std::env::temp_dir().join("digitfrac-sysload-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sys.json");
        std::fs::write(&path, sys.to_json()).unwrap();
        let back = load_system(path.to_str().unwrap()).unwrap();
        assert_eq!(back.digit_count(), sys.digit_count());
        assert_eq!(system_hash(&back), system_hash(&sys));
    }

    #[test]
    fn hash_separates_systems() {
        let a = system_hash(&load_system("cantor").unwrap());
        let b = system_hash(&load_system("lebesgue:3:1").unwrap());
        assert_ne!(a, b);
    }
}
