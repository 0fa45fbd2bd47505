use super::*;

fn check_count(field: &'static str, len: usize) -> Result<u8, ProtocolError> {
    u8::try_from(len).map_err(|_| ProtocolError::FieldOverflow { field, len })
}

fn check_len32(field: &'static str, len: usize) -> Result<u32, ProtocolError> {
    u32::try_from(len).map_err(|_| ProtocolError::FieldOverflow { field, len })
}

fn validate(msg: &WireMessage) -> Result<(), ProtocolError> {
    match msg {
        WireMessage::Initialization(m) => {
            check_count("networks", m.networks.len())?;
            check_count("functions", m.functions.len())?;
            for n in &m.networks {
                check_count("network id", n.id.len())?;
            }
        }
        WireMessage::ContextSensor(m) => {
            if m.battery_level > 100 {
                return Err(ProtocolError::InvalidEnum {
                    field: "battery_level",
                    value: m.battery_level.into(),
                });
            }
            check_count("net_id", m.net_id.len())?;
        }
        WireMessage::ContextRequest(m) => {
            check_len32("info", m.info.len())?;
        }
        WireMessage::Assignments(m) => {
            check_count("rd_pairs", m.rd_pairs.len())?;
            check_count("vd_pairs", m.vd_pairs.len())?;
        }
        WireMessage::Data(m) => {
            for e in &m.entries {
                check_len32("data", e.data.len())?;
            }
        }
    }
    Ok(())
}

pub fn encode(msg: &WireMessage) -> Result<Vec<u8>, ProtocolError> {
    validate(msg)?;
    let mut out = Vec::with_capacity(wire_size(msg));
    out.push(msg.message_type() as u8);
    match msg {
        WireMessage::Initialization(m) => {
            out.extend_from_slice(&m.device_id.to_be_bytes());
            out.push(device_kind_code(m.device_type));
            out.push(m.networks.len() as u8);
            for n in &m.networks {
                out.push(n.id.len() as u8);
                out.extend_from_slice(&n.id);
                out.extend_from_slice(&n.monetary_cost.to_be_bytes());
            }
            out.push(m.functions.len() as u8);
            for f in &m.functions {
                out.push(f.function_type.code());
                out.extend_from_slice(&f.energy.to_be_bytes());
            }
        }
        WireMessage::ContextSensor(m) => {
            out.extend_from_slice(&m.device_id.to_be_bytes());
            out.push(m.battery_level);
            out.push(m.charging as u8);
            out.push(m.moving.code());
            out.push(network_kind_code(m.network_kind));
            out.push(m.net_id.len() as u8);
            out.extend_from_slice(&m.net_id);
            out.extend_from_slice(&m.avg_link_speed.to_be_bytes());
        }
        WireMessage::ContextRequest(m) => {
            out.push(m.request_type);
            out.extend_from_slice(&(m.info.len() as u32).to_be_bytes());
            out.extend_from_slice(&m.info);
        }
        WireMessage::Assignments(m) => {
            out.push(m.rd_pairs.len() as u8);
            for &(r, d) in &m.rd_pairs {
                out.extend_from_slice(&[r, d]);
            }
            out.push(m.vd_pairs.len() as u8);
            for &(v, d) in &m.vd_pairs {
                out.extend_from_slice(&[v, d]);
            }
        }
        WireMessage::Data(m) => {
            for e in &m.entries {
                out.push(e.request_type);
                out.extend_from_slice(&(e.data.len() as u32).to_be_bytes());
                out.extend_from_slice(&e.data);
            }
        }
    }
    Ok(out)
}

/// Encoded length of `msg`, computed from field widths.
pub fn wire_size(msg: &WireMessage) -> usize {
    1 + match msg {
        WireMessage::Initialization(m) => {
            8 + 1
                + 1
                + m.networks.iter().map(|n| 1 + n.id.len() + 4).sum::<usize>()
                + 1
                + m.functions.len() * (1 + 4)
        }
        WireMessage::ContextSensor(m) => 8 + 1 + 1 + 1 + 1 + 1 + m.net_id.len() + 4,
        WireMessage::ContextRequest(m) => 1 + 4 + m.info.len(),
        WireMessage::Assignments(m) => 1 + 2 * m.rd_pairs.len() + 1 + 2 * m.vd_pairs.len(),
        WireMessage::Data(m) => m.entries.iter().map(|e| 1 + 4 + e.data.len()).sum(),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(ProtocolError::Truncated {
                offset: self.buf.len(),
            })?;
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, ProtocolError> {
        Ok(f32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn bytes(&mut self, n: usize) -> Result<Vec<u8>, ProtocolError> {
        Ok(self.take(n)?.to_vec())
    }

    fn at_end(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn invalid(field: &'static str, value: u8) -> ProtocolError {
    ProtocolError::InvalidEnum {
        field,
        value: value.into(),
    }
}

fn device_kind(code: u8) -> Result<DeviceKind, ProtocolError> {
    DeviceKind::ALL
        .into_iter()
        .find(|&k| device_kind_code(k) == code)
        .ok_or_else(|| invalid("device_type", code))
}

fn network_kind(code: u8) -> Result<Option<NetworkKind>, ProtocolError> {
    [
        None,
        Some(NetworkKind::WiFi),
        Some(NetworkKind::Cellular),
        Some(NetworkKind::Bluetooth),
    ]
    .into_iter()
    .find(|&k| network_kind_code(k) == code)
    .ok_or_else(|| invalid("network_kind", code))
}

pub fn decode(bytes: &[u8]) -> Result<WireMessage, ProtocolError> {
    let mut rd = Reader { buf: bytes, pos: 0 };
    let msg = match MessageType::try_from(rd.u8()?)? {
        MessageType::Initialization => {
            let device_id = rd.u64()?;
            let device_type = device_kind(rd.u8()?)?;
            let n = rd.u8()?;
            let mut networks = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let len = rd.u8()? as usize;
                let id = rd.bytes(len)?;
                let monetary_cost = rd.f32()?;
                networks.push(WireNetwork { id, monetary_cost });
            }
            let m = rd.u8()?;
            let mut functions = Vec::with_capacity(m as usize);
            for _ in 0..m {
                let code = rd.u8()?;
                let function_type =
                    FunctionType::from_code(code).ok_or_else(|| invalid("function_type", code))?;
                let energy = rd.f32()?;
                functions.push(WireFunction {
                    function_type,
                    energy,
                });
            }
            WireMessage::Initialization(InitializationMsg {
                device_id,
                device_type,
                networks,
                functions,
            })
        }
        MessageType::ContextSensor => {
            let device_id = rd.u64()?;
            let battery_level = rd.u8()?;
            if battery_level > 100 {
                return Err(invalid("battery_level", battery_level));
            }
            let charging = match rd.u8()? {
                0 => false,
                1 => true,
                other => return Err(invalid("charging", other)),
            };
            let code = rd.u8()?;
            let moving = MovingStatus::from_code(code).ok_or_else(|| invalid("moving", code))?;
            let network_kind = network_kind(rd.u8()?)?;
            let len = rd.u8()? as usize;
            let net_id = rd.bytes(len)?;
            let avg_link_speed = rd.f32()?;
            WireMessage::ContextSensor(ContextSensorMsg {
                device_id,
                battery_level,
                charging,
                moving,
                network_kind,
                net_id,
                avg_link_speed,
            })
        }
        MessageType::ContextRequest => {
            let request_type = rd.u8()?;
            let len = rd.u32()? as usize;
            let info = rd.bytes(len)?;
            WireMessage::ContextRequest(ContextRequestMsg { request_type, info })
        }
        MessageType::Assignments => {
            let n = rd.u8()?;
            let rd_pairs = (0..n)
                .map(|_| Ok((rd.u8()?, rd.u8()?)))
                .collect::<Result<_, ProtocolError>>()?;
            let m = rd.u8()?;
            let vd_pairs = (0..m)
                .map(|_| Ok((rd.u8()?, rd.u8()?)))
                .collect::<Result<_, ProtocolError>>()?;
            WireMessage::Assignments(AssignmentsMsg { rd_pairs, vd_pairs })
        }
        MessageType::Data => {
            let mut entries = Vec::new();
            while !rd.at_end() {
                let request_type = rd.u8()?;
                let len = rd.u32()? as usize;
                let data = rd.bytes(len)?;
                entries.push(DataEntry { request_type, data });
            }
            WireMessage::Data(DataMsg { entries })
        }
    };
    if !rd.at_end() {
        return Err(ProtocolError::TrailingBytes {
            count: bytes.len() - rd.pos,
        });
    }
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assignments() -> WireMessage {
        WireMessage::Assignments(AssignmentsMsg {
            rd_pairs: vec![(2, 1)],
            vd_pairs: vec![(3, 1)],
        })
    }

    fn sensor(ssid: &[u8]) -> WireMessage {
        WireMessage::ContextSensor(ContextSensorMsg {
            device_id: 0x0102_0304_0506_0708,
            battery_level: 45,
            charging: false,
            moving: MovingStatus::Walking,
            network_kind: Some(NetworkKind::WiFi),
            net_id: ssid.to_vec(),
            avg_link_speed: 1.5e6,
        })
    }

    #[test]
    fn assignments_layout() {
        let bytes = encode(&assignments()).unwrap();
        assert_eq!(bytes, [0x04, 0x01, 0x02, 0x01, 0x01, 0x03, 0x01]);
        assert_eq!(wire_size(&assignments()), 7);
    }

    #[test]
    fn empty_data_is_one_byte() {
        let msg = WireMessage::Data(DataMsg { entries: vec![] });
        assert_eq!(encode(&msg).unwrap(), [0x05]);
        assert_eq!(wire_size(&msg), 1);
        assert_eq!(decode(&[0x05]).unwrap(), msg);
    }

    #[test]
    fn initialization_length_follows_field_widths() {
        let msg = WireMessage::Initialization(InitializationMsg {
            device_id: 7,
            device_type: DeviceKind::Watch,
            networks: vec![WireNetwork {
                id: b"home-ap".to_vec(),
                monetary_cost: 0.0,
            }],
            functions: vec![
                WireFunction {
                    function_type: FunctionType::Accelerometer,
                    energy: 168.4,
                },
                WireFunction {
                    function_type: FunctionType::Gyroscope,
                    energy: 181.9,
                },
            ],
        });
        let n1 = 7;
        let expected = 1 + 8 + 1 + 1 + (1 + n1 + 4) + 1 + 2 * (1 + 4);
        assert_eq!(encode(&msg).unwrap().len(), expected);
        assert_eq!(wire_size(&msg), expected);
    }

    #[test]
    fn context_sensor_size() {
        assert_eq!(wire_size(&sensor(b"abcde")), 23);
        assert_eq!(encode(&sensor(b"abcde")).unwrap().len(), 23);
    }

    #[test]
    fn unknown_type() {
        assert_eq!(decode(&[0xFF, 0x00]), Err(ProtocolError::UnknownType(0xFF)));
        assert!(matches!(decode(&[]), Err(ProtocolError::Truncated { .. })));
    }

    #[test]
    fn truncated_mid_pair() {
        let mut bytes = encode(&assignments()).unwrap();
        bytes.pop();
        assert!(matches!(
            decode(&bytes),
            Err(ProtocolError::Truncated { .. })
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = encode(&assignments()).unwrap();
        bytes.push(0);
        assert_eq!(
            decode(&bytes),
            Err(ProtocolError::TrailingBytes { count: 1 })
        );
    }

    #[test]
    fn invalid_enums_rejected() {
        let good = encode(&sensor(b"x")).unwrap();
        // battery at offset 9, charging 10, moving 11, network 12
        for (offset, value) in [(9, 101u8), (10, 2), (11, 9), (12, 7)] {
            let mut bytes = good.clone();
            bytes[offset] = value;
            assert!(
                matches!(decode(&bytes), Err(ProtocolError::InvalidEnum { .. })),
                "offset {offset}"
            );
        }
    }

    #[test]
    fn overflowing_counts_rejected() {
        let msg = WireMessage::Assignments(AssignmentsMsg {
            rd_pairs: vec![(0, 0); 256],
            vd_pairs: vec![],
        });
        assert_eq!(
            encode(&msg),
            Err(ProtocolError::FieldOverflow {
                field: "rd_pairs",
                len: 256
            })
        );
        let long_ssid = sensor(&[b'a'; 300]);
        assert!(matches!(
            encode(&long_ssid),
            Err(ProtocolError::FieldOverflow { .. })
        ));
        let mut bad_battery = sensor(b"");
        if let WireMessage::ContextSensor(m) = &mut bad_battery {
            m.battery_level = 150;
        }
        assert!(matches!(
            encode(&bad_battery),
            Err(ProtocolError::InvalidEnum { .. })
        ));
    }

    pub(crate) fn arb_message() -> impl Strategy<Value = WireMessage> {
        let bytes = |max: usize| prop::collection::vec(any::<u8>(), 0..=max);
        let real = || -1.0e6f32..1.0e6f32;
        let function = prop::sample::select(FunctionType::ALL.to_vec());
        let kind = prop::sample::select(DeviceKind::ALL.to_vec());
        let moving = prop::sample::select(MovingStatus::ALL.to_vec());
        let network = prop::sample::select(vec![
            None,
            Some(NetworkKind::WiFi),
            Some(NetworkKind::Cellular),
            Some(NetworkKind::Bluetooth),
        ]);
        let init = (
            any::<u64>(),
            kind,
            prop::collection::vec(
                (bytes(40), real())
                    .prop_map(|(id, monetary_cost)| WireNetwork { id, monetary_cost }),
                0..6,
            ),
            prop::collection::vec(
                (function, real()).prop_map(|(function_type, energy)| WireFunction {
                    function_type,
                    energy,
                }),
                0..9,
            ),
        )
            .prop_map(|(device_id, device_type, networks, functions)| {
                WireMessage::Initialization(InitializationMsg {
                    device_id,
                    device_type,
                    networks,
                    functions,
                })
            });
        let ctx = (
            any::<u64>(),
            0u8..=100,
            any::<bool>(),
            moving,
            network,
            bytes(64),
            real(),
        )
            .prop_map(
                |(device_id, battery_level, charging, moving, network_kind, net_id, speed)| {
                    WireMessage::ContextSensor(ContextSensorMsg {
                        device_id,
                        battery_level,
                        charging,
                        moving,
                        network_kind,
                        net_id,
                        avg_link_speed: speed,
                    })
                },
            );
        let req = (any::<u8>(), bytes(128)).prop_map(|(request_type, info)| {
            WireMessage::ContextRequest(ContextRequestMsg { request_type, info })
        });
        let asg = (
            prop::collection::vec(any::<(u8, u8)>(), 0..20),
            prop::collection::vec(any::<(u8, u8)>(), 0..20),
        )
            .prop_map(|(rd_pairs, vd_pairs)| {
                WireMessage::Assignments(AssignmentsMsg { rd_pairs, vd_pairs })
            });
        let data = prop::collection::vec(
            (any::<u8>(), bytes(64))
                .prop_map(|(request_type, data)| DataEntry { request_type, data }),
            0..5,
        )
        .prop_map(|entries| WireMessage::Data(DataMsg { entries }));
        prop_oneof![init, ctx, req, asg, data]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn round_trip(msg in arb_message()) {
            let bytes = encode(&msg).unwrap();
            prop_assert_eq!(bytes.len(), wire_size(&msg));
            prop_assert_eq!(decode(&bytes).unwrap(), msg);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        // Strict prefixes never decode, except Data messages cut exactly at
        // an entry boundary, which decode to the leading entries.
        #[test]
        fn strict_prefixes_do_not_decode(msg in arb_message()) {
            let bytes = encode(&msg).unwrap();
            for cut in 0..bytes.len() {
                match (&msg, decode(&bytes[..cut])) {
                    (WireMessage::Data(full), Ok(WireMessage::Data(part))) => {
                        prop_assert!(part.entries.len() < full.entries.len());
                        prop_assert_eq!(&full.entries[..part.entries.len()], &part.entries[..]);
                    }
                    (_, Ok(other)) => prop_assert!(false, "prefix {} decoded to {:?}", cut, other),
                    (_, Err(e)) => {
                        let truncated = matches!(e, ProtocolError::Truncated { .. });
                        prop_assert!(truncated, "prefix {} failed with {:?}", cut, e);
                    }
                }
            }
        }
    }
}
