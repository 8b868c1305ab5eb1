//! Serde helpers for report types.

/// Serialize `Complex64` as a two-element `[re, im]` array.
pub mod complex {
    use num_complex::Complex64;
    use serde::ser::SerializeTuple;

    pub fn serialize<S: serde::Serializer>(
        z: &Complex64,
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut t = ser.serialize_tuple(2)?;
        t.serialize_element(&z.re)?;
        t.serialize_element(&z.im)?;
        t.end()
    }
}

/// Same as [`complex`] but for `Option<Complex64>`.
pub mod complex_opt {
    use num_complex::Complex64;
    use serde::ser::SerializeTuple;

    pub fn serialize<S: serde::Serializer>(
        z: &Option<Complex64>,
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match z {
            None => ser.serialize_none(),
            Some(z) => {
                let mut t = ser.serialize_tuple(2)?;
                t.serialize_element(&z.re)?;
                t.serialize_element(&z.im)?;
                t.end()
            }
        }
    }
}
