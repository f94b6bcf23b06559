//! Wire-level tests of the NDJSON bridge: full conversations, error
//! frames, multiplexed calls and disconnect handling.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::Arc;
use std::time::Duration;

use ivrflow::bridge::{self, decode_command, BridgeCommand, BridgeServer};
use ivrflow::config::EngineConfig;
use ivrflow::engine::CallEngine;
use ivrflow::session::Phase;
use ivrflow::synth;

struct TestBridge {
    server: BridgeServer,
    engine: Arc<CallEngine>,
}

fn start_bridge(config: EngineConfig) -> TestBridge {
    let engine = Arc::new(CallEngine::new(Arc::new(config), None));
    let server = bridge::serve("127.0.0.1:0", Arc::clone(&engine)).expect("bind");
    TestBridge { server, engine }
}

struct Client {
    stream: TcpStream,
    reader: BufReader<TcpStream>,
}

impl Client {
    fn connect(bridge: &TestBridge) -> Self {
        let stream = TcpStream::connect(bridge.server.local_addr()).expect("connect");
        stream
            .set_read_timeout(Some(Duration::from_secs(5)))
            .expect("timeout");
        let reader = BufReader::new(stream.try_clone().expect("clone"));
        Client { stream, reader }
    }

    fn send_raw(&mut self, frame: &str) {
        self.stream.write_all(frame.as_bytes()).expect("write");
    }

    fn read_line(&mut self) -> String {
        let mut line = String::new();
        self.reader.read_line(&mut line).expect("read");
        line
    }

    fn read_commands(&mut self, n: usize) -> Vec<BridgeCommand> {
        (0..n)
            .map(|_| decode_command(&self.read_line()).expect("command"))
            .collect()
    }
}

fn say_frame(call_id: &str, text: &str) -> String {
    format!("{{\"type\":\"utterance\",\"call_id\":\"{call_id}\",\"text\":\"{text}\"}}\n")
}

fn start_frame(call_id: &str) -> String {
    format!("{{\"type\":\"session_start\",\"call_id\":\"{call_id}\",\"language\":\"kk\"}}\n")
}

#[test]
fn confirmed_call_transfers_then_hangs_up() {
    let config = synth::test_config(8);
    let class = config.taxonomy.classes()[0].clone();
    let bridge = start_bridge(config);
    let mut client = Client::connect(&bridge);

    client.send_raw(&start_frame("c1"));
    let commands = client.read_commands(2);
    assert!(matches!(commands[0], BridgeCommand::Play { .. }));
    assert!(matches!(commands[1], BridgeCommand::Listen { .. }));

    client.send_raw(&say_frame(
        "c1",
        &format!(
            "менің {} {} мәселем бар",
            class.keywords[0], class.keywords[1]
        ),
    ));
    let commands = client.read_commands(2);
    assert!(matches!(commands[0], BridgeCommand::Play { .. }));

    client.send_raw(&say_frame("c1", "иә"));
    let commands = client.read_commands(2);
    assert_eq!(
        commands,
        vec![
            BridgeCommand::Transfer {
                call_id: "c1".to_string(),
                queue_id: class.queue_id.clone(),
            },
            BridgeCommand::Hangup {
                call_id: "c1".to_string()
            },
        ]
    );
    bridge.server.shutdown();
}

#[test]
fn malformed_frames_get_error_replies_and_the_connection_survives() {
    let bridge = start_bridge(synth::test_config(8));
    let mut client = Client::connect(&bridge);

    client.send_raw("this is not json\n");
    let reply = client.read_line();
    assert!(reply.contains("\"type\":\"error\""), "{reply}");

    client.send_raw("{\"type\":\"session_start\",\"call_id\":\"c1\"}\n");
    let reply = client.read_line();
    assert!(reply.contains("language"), "{reply}");

    // Unknown call ids produce an error frame, not a command.
    client.send_raw(&say_frame("ghost", "иә"));
    let reply = client.read_line();
    assert!(reply.contains("\"type\":\"error\""), "{reply}");

    // The connection still works after all that.
    client.send_raw(&start_frame("c1"));
    let commands = client.read_commands(2);
    assert!(matches!(commands[0], BridgeCommand::Play { .. }));
    bridge.server.shutdown();
}

#[test]
fn dropped_connection_abandons_in_flight_calls() {
    let config = synth::test_config(8);
    let class = config.taxonomy.classes()[0].clone();
    let bridge = start_bridge(config);
    let mut client = Client::connect(&bridge);

    client.send_raw(&start_frame("c1"));
    client.read_commands(2);
    client.send_raw(&say_frame(
        "c1",
        &format!(
            "менің {} {} мәселем бар",
            class.keywords[0], class.keywords[1]
        ),
    ));
    client.read_commands(2); // mid-Confirming now
    drop(client);

    let deadline = std::time::Instant::now() + Duration::from_secs(5);
    loop {
        if bridge.engine.phase("c1") == Some(Phase::Abandoned) {
            break;
        }
        assert!(std::time::Instant::now() < deadline, "call never abandoned");
        std::thread::sleep(Duration::from_millis(20));
    }
    bridge.server.shutdown();
}

#[test]
fn interleaved_calls_keep_per_call_order() {
    let config = synth::test_config(8);
    let class_a = config.taxonomy.classes()[0].clone();
    let class_b = config.taxonomy.classes()[1].clone();
    let bridge = start_bridge(config);
    let mut client = Client::connect(&bridge);

    client.send_raw(&start_frame("a"));
    client.read_commands(2);
    client.send_raw(&start_frame("b"));
    client.read_commands(2);

    // Interleave the two dialogs on one connection.
    client.send_raw(&say_frame(
        "a",
        &format!("{} {} мәселесі", class_a.keywords[0], class_a.keywords[1]),
    ));
    let a1 = client.read_commands(2);
    client.send_raw(&say_frame(
        "b",
        &format!("{} {} мәселесі", class_b.keywords[0], class_b.keywords[1]),
    ));
    let b1 = client.read_commands(2);
    client.send_raw(&say_frame("b", "иә"));
    let b2 = client.read_commands(2);
    client.send_raw(&say_frame("a", "иә"));
    let a2 = client.read_commands(2);

    for (commands, call_id) in [(&a1, "a"), (&b1, "b"), (&a2, "a"), (&b2, "b")] {
        for command in commands.iter() {
            assert_eq!(command.call_id(), call_id);
        }
    }
    assert!(matches!(&a1[0], BridgeCommand::Play { .. }));
    assert_eq!(
        a2[0],
        BridgeCommand::Transfer {
            call_id: "a".to_string(),
            queue_id: class_a.queue_id.clone(),
        }
    );
    assert_eq!(
        b2[0],
        BridgeCommand::Transfer {
            call_id: "b".to_string(),
            queue_id: class_b.queue_id.clone(),
        }
    );
    bridge.server.shutdown();
}

#[test]
fn two_connections_serve_independent_calls() {
    let config = synth::test_config(8);
    let class = config.taxonomy.classes()[2].clone();
    let bridge = start_bridge(config);
    let mut first = Client::connect(&bridge);
    let mut second = Client::connect(&bridge);

    first.send_raw(&start_frame("conn1-call"));
    second.send_raw(&start_frame("conn2-call"));
    assert_eq!(first.read_commands(2).len(), 2);
    assert_eq!(second.read_commands(2).len(), 2);

    second.send_raw(&say_frame(
        "conn2-call",
        &format!("{} {} мәселесі", class.keywords[0], class.keywords[1]),
    ));
    let commands = second.read_commands(2);
    assert!(matches!(commands[0], BridgeCommand::Play { .. }));
    bridge.server.shutdown();
}
